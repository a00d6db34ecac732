import numpy as np
import pytest

from gims import compare
from gims.agc import AgcParams


def instance(n=200, seed=0, side=150.0):
    rng = np.random.default_rng(seed)
    desc = rng.normal(size=(n, 16))
    return rng.uniform(0, side, (n, 2)), desc / np.linalg.norm(desc, axis=1, keepdims=True)


def test_one_row_per_method_in_order():
    pos, desc = instance()
    rep = compare.compare(pos, desc)
    assert [r.method for r in rep.rows] == list(compare.METHODS)


@pytest.mark.parametrize("seed", range(5))
def test_agc_row_is_connected(seed):
    pos, desc = instance(seed=seed)
    s = compare.compare(pos, desc, ["agc"]).row("agc").stats
    assert s["isolated"] == 0 and s["components"] == 1


def test_tiny_epsilon_isolates_everything():
    pos, desc = instance(100)
    s = compare.compare(pos, desc, ["epsilon"], {"epsilon": 1e-6}).row("epsilon").stats
    assert s["isolated"] == 100 and s["edges"] == 0


@pytest.mark.parametrize("seed", range(5))
def test_delaunay_is_connected(seed):
    pos, desc = instance(60 + 20 * seed, seed)
    assert compare.compare(pos, desc, ["delaunay"]).row("delaunay").stats["components"] == 1


def test_agc_edge_count_bounds():
    for seed in range(5):
        pos, desc = instance(120, seed)
        rep = compare.compare(pos, desc, ["agc", "complete"])
        n = 120
        assert n - 1 <= rep.row("agc").stats["edges"] <= rep.row("complete").stats["edges"]


def test_failures_become_rows():
    rep = compare.compare([[0, 0], [1, 1]], np.eye(2), ["delaunay", "mst"])
    assert rep.row("delaunay").error and rep.row("delaunay").stats is None
    assert rep.row("mst").error is None
    assert "delaunay" in rep.to_markdown() and rep.to_csv().startswith("method,")


def test_parallel_matches_serial():
    pos, desc = instance(150, 3)
    a = compare.compare(pos, desc, jobs=1)
    b = compare.compare(pos, desc, jobs=3)
    assert [r.stats for r in a.rows] == [r.stats for r in b.rows]


def test_unknown_method():
    with pytest.raises(ValueError):
        compare.compare(np.zeros((3, 2)), np.eye(3), ["voronoi"])
    with pytest.raises(KeyError):
        compare.compare(*instance(10), ["mst"]).row("agc")
