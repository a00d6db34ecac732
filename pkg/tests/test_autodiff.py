import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import sparse

from gims import autodiff as ad


def numeric_grad(f, x, h=1e-6):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2 * h)
    return g


def check(fn, *shapes, seed=0, positive=False, tol=1e-6):
    """``fn`` maps tensors to a tensor; the check reduces it with random weights."""
    rng = np.random.default_rng(seed)
    xs = [rng.uniform(0.5, 2.0, s) if positive else rng.normal(size=s) for s in shapes]
    probe = rng.normal(size=np.shape(fn(*[ad.Tensor(x) for x in xs]).data))

    def scalar(*vals):
        return float((fn(*[ad.Tensor(v) for v in vals]).data * probe).sum())

    ts = [ad.parameter(x) for x in xs]
    out = fn(*ts)
    out.backward(probe)
    for k, t in enumerate(ts):
        def f(v, k=k):
            vals = list(xs)
            vals[k] = v
            return scalar(*vals)
        num = numeric_grad(f, xs[k])
        assert np.allclose(t.grad, num, atol=tol, rtol=tol), (k, np.abs(t.grad - num).max())


def test_elementwise_ops():
    check(lambda a, b: a + b, (3, 4), (4,))
    check(lambda a, b: a - b, (3, 1), (3, 4))
    check(lambda a, b: a * b, (2, 3), (2, 3))
    check(lambda a: -a / 3.0, (5,))
    check(lambda a: ad.exp(a), (4, 2))
    check(lambda a: ad.log(a), (4, 2), positive=True)


def test_relu_away_from_kink():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(6, 6))
    x[np.abs(x) < 0.05] = 0.5
    t = ad.parameter(x)
    ad.relu(t).backward(np.ones_like(x))
    assert np.array_equal(t.grad, (x > 0).astype(float))


def test_matmul_and_batched_matmul():
    check(lambda a, b: a @ b, (3, 4), (4, 5))
    check(lambda a, b: ad.matmul(a, b), (2, 3, 4), (2, 4, 3))


def test_const_matmul_with_sparse_matrix():
    M = sparse.random(5, 5, density=0.5, random_state=0, format="csr")
    check(lambda h: ad.const_matmul(M, h), (5, 3))


def test_reductions_and_softmax():
    check(lambda a: ad.tsum(a), (3, 4))
    check(lambda a: ad.tsum(a, axis=1), (3, 4))
    check(lambda a: ad.tsum(a, axis=0, keepdims=True), (3, 4))
    check(lambda a: ad.mean(a, axis=1), (3, 4))
    check(lambda a: ad.logsumexp(a, axis=1), (3, 4))
    check(lambda a: ad.logsumexp(a, axis=0, keepdims=True), (3, 4))
    check(lambda a: ad.softmax(a, axis=-1), (2, 3, 4))


def test_shape_ops():
    check(lambda a: ad.reshape(a, (6, 2)), (3, 4))
    check(lambda a: ad.transpose(a, (1, 0, 2)), (2, 3, 4))
    check(lambda a: a.T, (2, 5))
    check(lambda a, b: ad.concat([a, b], axis=1), (3, 2), (3, 4))
    check(lambda a: ad.broadcast_to(a, (4, 3)), (1, 3))
    check(lambda a: a[np.array([0, 2, 2, 1])], (3, 2))
    check(lambda a: ad.take(a, (np.array([0, 1, 1]), np.array([2, 0, 0]))), (2, 3))


def test_floor_at_blocks_gradient_below_floor():
    t = ad.parameter([1e-20, 0.5])
    ad.floor_at(t, 1e-12).backward(np.ones(2))
    assert t.grad.tolist() == [0.0, 1.0]


def test_logsumexp_handles_minus_infinity_rows():
    out = ad.logsumexp(ad.Tensor(np.full((2, 3), -np.inf)), axis=1)
    assert np.all(out.data == -np.inf)


def test_shared_subexpression_accumulates():
    x = ad.parameter(np.array([2.0, 3.0]))
    y = x * x + x
    ad.tsum(y).backward()
    assert np.allclose(x.grad, 2 * x.data + 1)


def test_tensor_division_rejected():
    with pytest.raises(TypeError):
        ad.Tensor(1.0) / ad.Tensor(2.0)


def test_constants_do_not_track():
    out = ad.Tensor([1.0]) * 3
    assert not out.requires_grad and out._parents == ()


@settings(max_examples=25)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**31))
def test_composite_property(m, n, seed):
    check(lambda a, b: ad.softmax(a @ ad.transpose(b), axis=1) * ad.exp(a @ ad.transpose(b) * 0.1),
          (m, 3), (n, 3), seed=seed)
