import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gims import geometry
from gims.geometry import DegenerateConfiguration, PointAtInfinity, RansacConfig


def random_h(rng, w=320, h=240, jitter=30):
    corners = geometry.image_corners(w, h)
    return geometry.dlt_homography(corners, corners + rng.uniform(-jitter, jitter, (4, 2)))


def test_apply_homography_examples():
    assert np.allclose(geometry.apply_homography(np.eye(3), [1.5, 2.5]), [1.5, 2.5])
    T = np.array([[1, 0, 5], [0, 1, 0], [0, 0, 1.0]])
    assert geometry.apply_homography(T, [1, 2]).tolist() == [6, 2]
    P = np.array([[1, 0, 0], [0, 1, 0], [0.001, 0, 1.0]])
    assert geometry.apply_homography(P, [100, 0]) == pytest.approx([100 / 1.1, 0])
    with pytest.raises(PointAtInfinity):
        geometry.apply_homography(np.array([[1, 0, 0], [0, 1, 0], [1, 0, 0.0]]), [0, 0])


def test_dlt_recovers_known_h():
    rng = np.random.default_rng(0)
    H = random_h(rng)
    src = np.array([[10, 20], [300, 15], [290, 230], [5, 200]], dtype=float)
    est = geometry.dlt_homography(src, geometry.apply_homography(H, src))
    assert np.abs(est - H).max() < 1e-8


def test_dlt_identity_and_degenerate():
    src = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    assert np.allclose(geometry.dlt_homography(src, src), np.eye(3), atol=1e-12)
    with pytest.raises(DegenerateConfiguration):
        geometry.dlt_homography([[0, 0], [1, 1], [2, 2], [0, 1]], src)
    with pytest.raises(DegenerateConfiguration):
        geometry.dlt_homography(src[:3], src[:3])
    with pytest.raises(ValueError):
        geometry.dlt_homography(src, src[:3])


@settings(max_examples=30)
@given(st.integers(4, 40), st.integers(0, 2**31))
def test_dlt_overdetermined_exact(n, seed):
    rng = np.random.default_rng(seed)
    H = random_h(rng)
    src = rng.uniform(0, 300, (n, 2))
    try:
        est = geometry.dlt_homography(src, geometry.apply_homography(H, src))
    except DegenerateConfiguration:
        return
    assert np.allclose(geometry.apply_homography(est, src), geometry.apply_homography(H, src), atol=1e-6)


def test_ransac_all_inliers():
    rng = np.random.default_rng(1)
    H = random_h(rng)
    src = rng.uniform(0, 320, (100, 2))
    est, mask = geometry.ransac_homography(src, geometry.apply_homography(H, src))
    assert mask.all()
    assert np.abs(est - H).max() < 1e-6


def test_ransac_rejects_outliers_exactly():
    rng = np.random.default_rng(2)
    H = random_h(rng)
    src = rng.uniform(0, 320, (100, 2))
    dst = geometry.apply_homography(H, src)
    out = rng.choice(100, 20, replace=False)
    dst[out] = rng.uniform(0, 320, (20, 2))
    far = np.linalg.norm(dst[out] - geometry.apply_homography(H, src[out]), axis=1) >= 3
    est, mask = geometry.ransac_homography(src, dst, RansacConfig(inlier_thr=3.0))
    want = np.ones(100, bool)
    want[out[far]] = False
    assert np.array_equal(mask, want)


def test_ransac_too_few():
    est, mask = geometry.ransac_homography(np.zeros((3, 2)), np.zeros((3, 2)))
    assert est is None and not mask.any()


def test_ransac_is_seeded():
    rng = np.random.default_rng(3)
    src, dst = rng.uniform(0, 100, (30, 2)), rng.uniform(0, 100, (30, 2))
    a = geometry.ransac_homography(src, dst, RansacConfig(seed=4))
    b = geometry.ransac_homography(src, dst, RansacConfig(seed=4))
    assert np.array_equal(a[1], b[1])


def test_ransac_config_validation():
    for kw in (dict(max_iters=0), dict(inlier_thr=0), dict(confidence=1.0)):
        with pytest.raises(ValueError):
            RansacConfig(**kw)


def test_corner_error_examples():
    rng = np.random.default_rng(5)
    H = random_h(rng)
    assert geometry.corner_error(H, H, 320, 240) == 0.0
    T = np.array([[1, 0, 3], [0, 1, 4], [0, 0, 1.0]])
    assert geometry.corner_error(T @ H, H, 320, 240) == pytest.approx(5.0, abs=1e-9)
    assert geometry.corner_error(None, H, 320, 240) == math.inf


def test_corner_error_loop():
    rng = np.random.default_rng(6)
    A, B = random_h(rng), random_h(rng)
    total = 0.0
    for x, y in ((0, 0), (320, 0), (320, 240), (0, 240)):
        pa, pb = A @ [x, y, 1], B @ [x, y, 1]
        total += math.dist(pa[:2] / pa[2], pb[:2] / pb[2])
    assert geometry.corner_error(A, B, 320, 240) == pytest.approx(total / 4, rel=1e-12)


def test_auc_examples():
    assert geometry.auc([0, 0, 0], 10) == 100.0
    assert geometry.auc([11, 12, None], 10) == 0.0
    assert geometry.auc([5.0], 10) == 50.0
    with pytest.raises(ValueError):
        geometry.auc([], 5)
    with pytest.raises(ValueError):
        geometry.auc([1.0], 0)


def test_auc_missing_estimates():
    assert geometry.auc([0.0, None], 10) == 50.0
    assert geometry.auc([0.0, None], 10, drop_missing=True) == 100.0


def step_cdf_area(errors, t):
    """Each error x adds (t - x)+ / (n t) to the normalised area under the CDF."""
    e = sorted(x for x in errors)
    n = len(e)
    return 100.0 * sum(max(0.0, t - x) for x in e) / (n * t)


@settings(max_examples=60)
@given(st.lists(st.floats(0, 50), min_size=1, max_size=30), st.floats(0.5, 40))
def test_auc_equals_closed_form(errors, t):
    assert geometry.auc(errors, t) == pytest.approx(step_cdf_area(errors, t), abs=1e-9)


@settings(max_examples=60)
@given(st.lists(st.one_of(st.none(), st.floats(0, 60)), min_size=1, max_size=30))
def test_auc_monotone_in_threshold(errors):
    a5, a10, a25 = (geometry.auc(errors, t) for t in (5, 10, 25))
    assert 0 <= a5 <= a10 <= a25 <= 100


def test_auc_table_keys():
    assert set(geometry.auc_table([1.0, 2.0])) == {"auc@5", "auc@10", "auc@25"}
