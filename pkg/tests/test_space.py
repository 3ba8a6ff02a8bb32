"""Core space container: balls, thickening, boundary, doubling, (de)serialization."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coarsecalc import zoo
from coarsecalc.space import (
    MetricMeasureSpace,
    boundary,
    doubling_profile,
    geodesicity_report,
    load_space,
    save_space,
    thicken,
)


def test_from_dense_rejects_triangle_violation():
    d = np.array([[0.0, 1.0, 3.0], [1.0, 0.0, 1.0], [3.0, 1.0, 0.0]])
    with pytest.raises(ValueError, match="triangle"):
        MetricMeasureSpace.from_dense(d, np.ones(3), check_triangle=True)


def test_from_dense_rejects_asymmetry_and_bad_measure():
    d = np.array([[0.0, 1.0], [2.0, 0.0]])
    with pytest.raises(ValueError):
        MetricMeasureSpace.from_dense(d, np.ones(2))
    d = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ValueError):
        MetricMeasureSpace.from_dense(d, np.array([1.0, 0.0]))


@pytest.mark.parametrize("x,r,expected", [
    (0, 1.0, 2),   # endpoint sees itself and one neighbour
    (5, 1.0, 3),
    (5, 2.0, 5),
    (0, 100.0, 10),
])
def test_path_ball_volumes(x, r, expected):
    space = zoo.path(10)
    assert space.volume(x, r) == pytest.approx(expected)
    assert len(space.ball(x, r)) == expected


def test_interval_thicken_and_boundary():
    # closed-ball conventions on the 10-point path: thickening the interval
    # {3,4,5} by 1 adds one point each side, and the two-sided boundary
    # picks up the inner and outer rim, total measure 4.
    space = zoo.path(10)
    A = [3, 4, 5]
    assert sorted(thicken(space, A, 1.0).indices.tolist()) == [2, 3, 4, 5, 6]
    b = boundary(space, A, 1.0)
    assert sorted(b.indices.tolist()) == [2, 3, 5, 6]
    assert b.measure == pytest.approx(4.0)


def test_boundary_is_symmetric_in_complement():
    space = zoo.grid(2, 5)
    rng = np.random.default_rng(11)
    for _ in range(20):
        mask = rng.random(space.n) < 0.4
        if not mask.any() or mask.all():
            continue
        A = np.flatnonzero(mask)
        Ac = np.flatnonzero(~mask)
        left = sorted(boundary(space, A, 1.0).indices.tolist())
        right = sorted(boundary(space, Ac, 1.0).indices.tolist())
        assert left == right


@given(st.integers(min_value=0, max_value=24), st.floats(0.5, 3.0))
def test_thicken_contains_the_set(x, h):
    space = zoo.grid(2, 5)
    A = [x]
    out = thicken(space, A, h).indices
    assert x in out


def test_doubling_profile_on_path():
    # interior of a long path: V(x,2r)/V(x,r) = (2r+1)/(r+1) twice... the
    # report takes the worst point, which sits in the middle.
    rep = doubling_profile(zoo.path(101), [2.0])
    assert rep[0].r == 2.0
    assert rep[0].constant == pytest.approx(9.0 / 5.0)


def test_doubling_constant_bounded_on_grid():
    reps = doubling_profile(zoo.grid(2, 16), [1.0, 2.0, 4.0])
    for rep in reps:
        assert 1.0 <= rep.constant <= 4.0


@pytest.mark.parametrize("space", [
    zoo.path(7),
    zoo.grid(2, 4, metric="linf"),
    zoo.random_geometric(12, seed=3),
])
def test_save_load_roundtrip(space, tmp_path):
    p = tmp_path / "s.json"
    save_space(space, p)
    back = load_space(p)
    assert back.n == space.n
    np.testing.assert_allclose(back.measure, space.measure)
    for x in range(space.n):
        np.testing.assert_allclose(back.dist_row(x), space.dist_row(x),
                                   atol=1e-12)


def test_save_is_deterministic(tmp_path):
    space = zoo.random_geometric(15, seed=9)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_space(space, a)
    save_space(space, b)
    assert a.read_bytes() == b.read_bytes()


def test_geodesicity_statuses():
    path_rep = geodesicity_report(zoo.path(9), [1.0])
    assert path_rep[0]["status"] == "b-geodesic"
    assert path_rep[0]["add"] == pytest.approx(0.0, abs=1e-9)

    # two far clusters: chaining at b=1 cannot bridge the 10.0 gap
    coords = np.array([[0.0], [1.0], [11.0], [12.0]])
    clusters = MetricMeasureSpace.from_coords(coords, np.ones(4))
    rep = geodesicity_report(clusters, [1.0, 20.0])
    assert rep[0]["status"] == "disconnected"
    assert rep[1]["status"] in ("b-geodesic", "quasi-geodesic")


def test_min_dist_to():
    space = zoo.path(10)
    d = space.min_dist_to([0, 9])
    assert d[0] == 0.0 and d[9] == 0.0
    assert d[4] == pytest.approx(4.0)
    assert d[5] == pytest.approx(4.0)


def test_subset_complement_partition():
    space = zoo.grid(2, 3)
    A = space.subset([0, 4, 8])
    comp = A.complement()
    assert sorted(np.concatenate([A.indices, comp.indices]).tolist()) \
        == list(range(9))
    assert A.measure + comp.measure == pytest.approx(space.total_measure)
