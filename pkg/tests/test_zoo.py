"""Benchmark space generators: sizes, metrics, determinism, guard rails."""

import numpy as np
import pytest

from coarsecalc import zoo
from coarsecalc.zoo import SpaceSpec


def test_grid_shape_and_measure():
    g = zoo.grid(2, 4)
    assert g.n == 16
    np.testing.assert_allclose(g.measure, 1.0)
    assert g.meta["shape"] == (4, 4)


@pytest.mark.parametrize("metric,expected", [
    ("l1", 2.0),
    ("l2", np.sqrt(2.0)),
    ("linf", 1.0),
])
def test_grid_metric_variants(metric, expected):
    g = zoo.grid(2, 3, metric=metric)
    # (0,0) is index 0 and (1,1) is index 4 in row-major order
    assert g.dist(0, 4) == pytest.approx(expected)


def test_grid_rejects_unknown_metric():
    with pytest.raises(ValueError, match="metric"):
        zoo.grid(2, 3, metric="hamming")


def test_path_is_one_dimensional_grid():
    p = zoo.path(6)
    assert p.n == 6
    assert p.dist(0, 5) == pytest.approx(5.0)


@pytest.mark.parametrize("radius,size", [(1, 5), (2, 17), (3, 53)])
def test_free_group_ball_sizes(radius, size):
    # 4 * 3^(k-1) new words at word length k
    assert zoo.free_group_ball(2, radius).n == size


@pytest.mark.parametrize("depth,size", [(1, 4), (2, 10), (3, 22)])
def test_regular_tree_sizes(depth, size):
    # rooted 3-regular tree: 3 * 2^(k-1) vertices at depth k
    assert zoo.regular_tree(3, depth).n == size


def test_tree_is_unit_edge_graph():
    t = zoo.regular_tree(4, 3)
    assert t.dist(0, 1) == pytest.approx(1.0)
    row = t.dist_row(0)
    assert row.max() == pytest.approx(3.0)


def test_heisenberg_ball_growth():
    sizes = [zoo.heisenberg_ball(r).n for r in (1, 2, 3)]
    assert sizes[0] == 5
    # the commutator buys extra words over the abelian lattice, whose
    # l1 ball has exactly 2r^2 + 2r + 1 points; equal at r=1, more after
    for r, s in zip((2, 3), sizes[1:]):
        assert s > 2 * r * r + 2 * r + 1


def test_random_geometric_is_seed_deterministic():
    a = zoo.random_geometric(30, seed=12)
    b = zoo.random_geometric(30, seed=12)
    c = zoo.random_geometric(30, seed=13)
    np.testing.assert_array_equal(a.dist_row(0), b.dist_row(0))
    assert not np.allclose(a.dist_row(0), c.dist_row(0))


def test_scale_metric():
    s = zoo.scale_metric(zoo.path(5), 2.0)
    assert s.dist(0, 4) == pytest.approx(8.0)
    np.testing.assert_allclose(s.measure, 1.0)


def test_generate_dispatch():
    g = zoo.generate(SpaceSpec(family="grid", d=2, L=3, metric="linf"))
    assert g.n == 9
    t = zoo.generate(SpaceSpec(family="regular_tree", degree=3, depth=2))
    assert t.n == 10


def test_generate_errors():
    with pytest.raises(ValueError, match="seed"):
        zoo.generate(SpaceSpec(family="random_geometric", n=10))
    with pytest.raises(ValueError, match="requires parameter"):
        zoo.generate(SpaceSpec(family="grid", d=2))
    with pytest.raises(ValueError, match="unknown family"):
        zoo.generate(SpaceSpec(family="hyperbolic_plane"))


def test_point_count_guard():
    with pytest.raises(ValueError):
        zoo.free_group_ball(2, 40)
