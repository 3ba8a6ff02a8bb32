"""Rate functions, J_p evaluation, profile curves, inequality fitting."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coarsecalc import calculus, profiles, zoo
from coarsecalc.profiles import Backend, RateFunction
from coarsecalc.randomwalk import lazy_srw


# ---------------------------------------------------------------- rates


def test_power_rate_evaluation():
    phi = RateFunction.power(0.5, coef=2.0)
    assert phi(4.0) == pytest.approx(4.0)
    assert phi(9.0) == pytest.approx(6.0)


@given(st.floats(min_value=1e-3, max_value=1e3))
def test_power_inverse_roundtrip(r):
    phi = RateFunction.power(0.5, coef=2.0)
    v = phi.inverse(r)
    assert phi(v) == pytest.approx(r, rel=1e-9)


def test_log_power_monotone():
    phi = RateFunction.log_power(1.0, 0.5)
    xs = np.linspace(2.0, 50.0, 25)
    ys = [phi(x) for x in xs]
    assert all(a < b for a, b in zip(ys, ys[1:]))


def test_tabulated_rate_and_inverse():
    phi = RateFunction.tabulated([1.0, 2.0, 4.0], [1.0, 3.0, 5.0])
    assert phi(2.0) == pytest.approx(3.0)
    assert phi(1.0) < phi(1.5) < phi(2.0)
    assert phi.inverse(3.0) == pytest.approx(2.0)


def test_bounded_rate_inverse_is_inf_past_sup():
    phi = RateFunction.tabulated([1.0, 2.0], [1.0, 2.0])
    assert np.isinf(phi.inverse(5.0))


# ---------------------------------------------------------------- J_p


@pytest.mark.parametrize("idx,expected", [
    ([0], 0.5),        # endpoint: boundary {0, 1}
    ([4], 1.0 / 3.0),  # interior: boundary {3, 4, 5}
])
def test_j1_single_points_on_path(idx, expected):
    res = profiles.jp_subset(zoo.path(9), Backend.sup(1.0), idx, 1)
    assert res.value == pytest.approx(expected)
    assert res.mode == "exact"


def test_j2_matches_dirichlet_eigenvalue():
    space = zoo.path(12)
    vp = lazy_srw(space, 1.0)
    A = list(range(3, 8))
    res = profiles.jp_subset(space, Backend.viewpoint(vp), A, 2)
    delta = calculus.dirichlet_eigenvalue(vp, A).delta
    assert res.value == pytest.approx(delta ** -0.5, rel=1e-9)


def test_jp_whole_space_sentinel():
    space = zoo.path(6)
    with pytest.warns(UserWarning, match="whole_space"):
        res = profiles.jp_subset(space, Backend.sup(1.0), list(range(6)), 1)
    assert np.isinf(res.value)
    assert res.reason == "whole_space"


def test_isoperimetric_profile_monotone():
    space = zoo.path(12)
    curve = profiles.isoperimetric_profile(space, Backend.sup(1.0), 1,
                                           np.arange(1.0, 12.0))
    vals = curve.values[np.isfinite(curve.values)]
    assert np.all(np.diff(vals) >= -1e-12)


def test_candidates_equal_exact_on_small_path():
    space = zoo.path(9)
    v = np.arange(1.0, 9.0)
    cand = profiles.isoperimetric_profile(space, Backend.sup(1.0), 1, v)
    exact = profiles.isoperimetric_profile(space, Backend.sup(1.0), 1, v,
                                           strategy="exact")
    np.testing.assert_allclose(cand.values, exact.values, atol=1e-12)


def test_profile_in_balls_monotone_and_saturates():
    space = zoo.path(10)
    with pytest.warns(UserWarning, match="whole_space"):
        curve = profiles.profile_in_balls(space, Backend.sup(1.0), 1,
                                          [1.0, 2.0, 4.0, 9.0, 12.0])
    finite = np.isfinite(curve.values)
    assert np.all(np.diff(curve.values[finite]) >= -1e-12)
    # a ball of radius >= diameter is the whole space: J explodes
    assert np.isinf(curve.values[-1])


# ------------------------------------------------------- boundary curves


def test_boundary_profile_exact_on_path():
    # end intervals have one-sided rim of measure 2, and nothing beats them
    I, _, _ = profiles.boundary_profile(zoo.path(12), 1.0,
                                        t_grid=np.arange(1.0, 12.0))
    np.testing.assert_allclose(I.values, 2.0)
    assert I.mode == "exact"


def test_boundary_profile_interior_intervals():
    space = zoo.path(12)
    fam = [list(range(a, b + 1)) for a in range(1, 11)
           for b in range(a, 11)]
    I, I_down, I_up = profiles.boundary_profile(space, 1.0, family=fam,
                                                t_grid=np.arange(1.0, 11.0))
    # a singleton has a three-point rim; every longer interval has four
    np.testing.assert_allclose(I.values, [3.0] + [4.0] * 9)
    assert I.mode == "upper_bound"
    np.testing.assert_allclose(I_down.values, I.values)


def test_boundary_profile_whole_space_family():
    space = zoo.path(7)
    I, I_down, I_up = profiles.boundary_profile(
        space, 1.0, family=[list(range(7))], t_grid=[3.0, 7.0])
    np.testing.assert_allclose(I_down.values, 0.0)


# ---------------------------------------------------------------- fits


def test_sobolev_definitional_pass():
    # feeding the profile's own witnesses with the profile itself as the
    # rate gives C = C' = 1 by construction
    space = zoo.path(12)
    b = Backend.sup(1.0)
    v = np.arange(1.0, 12.0)
    curve = profiles.isoperimetric_profile(space, b, 1, v)
    keep = np.isfinite(curve.values)
    phi = RateFunction.tabulated(v[keep], curve.values[keep])
    fields = []
    for w, ok in zip(curve.witnesses, keep):
        if ok and w is not None:
            f = np.zeros(space.n)
            f[w["indices"]] = 1.0
            fields.append(f)
    rep = profiles.sobolev_verify(space, b, 1, phi, fields)
    assert rep.passes
    assert rep.C == pytest.approx(1.0, rel=1e-9)
    assert rep.C_prime == 1.0


def test_sobolev_zero_gradient_is_hard_failure():
    space = zoo.path(12)
    rep = profiles.sobolev_verify(space, Backend.sup(1.0), 1,
                                  RateFunction.power(0.5),
                                  [np.ones(12)])
    assert not rep.passes
    assert rep.failures and rep.failures[0]["reason"].startswith("zero")


def test_sobolev_constant_rate_degrades_with_size():
    # a bounded rate cannot absorb growing boxes: the fitted constant climbs
    phi = RateFunction.tabulated([1.0, 10 ** 6], [1.0, 1.0])
    cs = []
    for L in (8, 16, 32):
        space = zoo.grid(2, L)
        f = np.zeros(space.n)
        half = np.flatnonzero(
            np.arange(space.n) // L < L // 2)
        f[half] = 1.0
        rep = profiles.sobolev_verify(space, Backend.lp(1.0), 1, phi, [f])
        assert rep.passes
        cs.append(rep.C)
    assert cs[0] < cs[1] < cs[2]


def test_nash_check_small():
    space = zoo.grid(2, 6)
    vp = lazy_srw(space, 1.0)
    rng = np.random.default_rng(8)
    fields = [rng.standard_normal(space.n) for _ in range(5)]
    rep = profiles.nash_check(space, vp, RateFunction.power(0.5), fields)
    assert rep.passes
    assert np.isfinite(rep.C)


def test_nash_check_rejects_zero_field():
    space = zoo.grid(2, 4)
    vp = lazy_srw(space, 1.0)
    with pytest.raises(ValueError, match="zero"):
        profiles.nash_check(space, vp, RateFunction.power(0.5),
                            [np.zeros(space.n)])


# ---------------------------------------------------------------- cheeger


def test_cheeger_path_pinned():
    # a 4-point end interval has rim measure 2: constant 1/2, and no
    # admissible subset (mass <= 4.5) does better
    val, wit = profiles.cheeger(zoo.path(9), 1.0, "all")
    assert val == pytest.approx(0.5)
    assert wit.measure == pytest.approx(4.0)


def test_cheeger_family_dominates_exact():
    space = zoo.grid(2, 3)
    fam = [sub for sub, _ in profiles.candidate_subsets(space,
                                                        Backend.sup(1.0))]
    val_f, _ = profiles.cheeger(space, 1.0, fam)
    val_e, _ = profiles.cheeger(space, 1.0, "all")
    assert val_f >= val_e - 1e-12


def test_sinf_volume_check_statuses():
    space = zoo.grid(2, 8)
    ok = profiles.sinf_volume_check(space, RateFunction.power(2.0),
                                    [1.0, 2.0])
    assert ok.status in ("pass", "fail")
    bounded = profiles.sinf_volume_check(
        space, RateFunction.tabulated([1.0, 2.0], [1.0, 1.5]), [4.0])
    assert bounded.status == "phi_bounded"
