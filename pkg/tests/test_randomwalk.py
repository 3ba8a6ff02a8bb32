"""Walk kernels, return decay, the rate transform, spectral radii."""

import numpy as np
import pytest
from scipy.linalg import eigvalsh_tridiagonal

from coarsecalc import randomwalk, zoo
from coarsecalc.profiles import RateFunction
from coarsecalc.randomwalk import (
    DecayCurve,
    dirichlet_spectral_radius,
    exhaustion_radii,
    gamma_transform,
    iterate,
    lazy_srw,
    on_diagonal,
    pure_srw,
    spectral_radius,
)
from coarsecalc.viewpoint import is_symmetric


def test_lazy_srw_is_symmetric_everywhere():
    for space in (zoo.path(9), zoo.grid(2, 5), zoo.random_geometric(20, 1)):
        h = 0.3 if space.n == 20 else 1.0
        assert is_symmetric(lazy_srw(space, h)).symmetric


def test_pure_srw_interior_row():
    g = zoo.grid(2, 5)
    vp = pure_srw(g, ambient_degree=4)
    center = 2 * 5 + 2
    sup, dens = vp.row(center)
    assert sup.size == 4
    np.testing.assert_allclose(dens, 0.25)


def test_pure_srw_substochastic_at_rim():
    g = zoo.grid(2, 5)
    vp = pure_srw(g, ambient_degree=4)
    mass = vp.dens @ g.measure
    assert mass[0] == pytest.approx(0.5)     # corner keeps 2 of 4 moves
    assert mass[2 * 5 + 2] == pytest.approx(1.0)


def test_iterate_conserves_mass():
    vp = lazy_srw(zoo.grid(2, 6), 1.0)
    dens = iterate(vp, 7, 20)
    mass = dens @ vp.space.measure
    np.testing.assert_allclose(mass, 1.0, atol=1e-12)
    assert np.all(dens >= -1e-15)


def test_on_diagonal_pinned_first_step():
    # lazy kernel on the 3x3 grid: c0 = 1/5, corner keeps 1 - 2/5 = 3/5;
    # u_1(corner) = (3/5)^2 + 2 (1/5)^2 = 11/25
    vp = lazy_srw(zoo.grid(2, 3), 1.0)
    curve = on_diagonal(vp, 0, [1, 2, 3])
    assert curve.values[0] == pytest.approx(11.0 / 25.0)
    assert np.all(np.diff(curve.values) <= 1e-15)


def test_on_diagonal_requires_symmetry():
    space = zoo.path(5).with_measure(np.array([2.0, 1, 1, 1, 1]))
    from coarsecalc.viewpoint import standard_viewpoint
    with pytest.raises(ValueError, match="symmetric"):
        on_diagonal(standard_viewpoint(space, 1.0), 0, [1, 2])


def test_decay_curve_lookup():
    c = DecayCurve(np.array([1.0, 2.0]), np.array([0.5, 0.25]), 0, "test")
    assert c.at(2) == 0.25
    with pytest.raises(KeyError):
        c.at(3)


# ------------------------------------------------------------- transform


def test_gamma_transform_sqrt_closed_form():
    # phi(v) = sqrt(v) with cutoff: t = integral_vmin^M dv = M - vmin, so
    # gamma(t) = 1 / (t + vmin)
    phi = RateFunction.power(0.5)
    g = gamma_transform(phi, [0.5, 1.0, 4.0, 16.0], v_min=1e-6)
    for t, got in zip(g.t, g.gamma):
        assert got == pytest.approx(1.0 / (t + 1e-6), rel=1e-8)


def test_gamma_transform_linear_closed_form():
    # phi(v) = v: t = (M^2 - vmin^2)/2, so gamma(t) = (2t + vmin^2)^(-1/2)
    phi = RateFunction.power(1.0)
    g = gamma_transform(phi, [1.0, 2.0, 8.0], v_min=0.1)
    for t, got in zip(g.t, g.gamma):
        assert got == pytest.approx((2.0 * t + 0.01) ** -0.5, rel=1e-8)


def test_gamma_transform_demands_cutoff_when_divergent():
    with pytest.raises(ValueError, match="v_min"):
        gamma_transform(RateFunction.log_power(1.0, 0.0), [1.0])


def test_gamma_interpolation():
    phi = RateFunction.power(0.5)
    g = gamma_transform(phi, [1.0, 2.0, 4.0], v_min=1e-6)
    mid = g.at(3.0)
    assert g.gamma[2] < mid < g.gamma[1]


# ------------------------------------------------------- decay vs profile


def test_decay_vs_profile_lattice_slope():
    space = zoo.grid(2, 32)
    vp = lazy_srw(space, 1.0)
    rep = randomwalk.decay_vs_profile(space, vp, RateFunction.power(0.5),
                                      n_grid=range(1, 65),
                                      centers=[16 * 32 + 16])
    assert rep.status == "ok"
    assert rep.slope_decay == pytest.approx(-1.0, abs=0.15)
    assert np.isfinite(rep.best_c)


def test_nash_from_decay_dominating_curve():
    g = zoo.grid(2, 8)
    vp = lazy_srw(g, 1.0)
    steps = np.arange(1, 33)
    per_point = np.vstack([on_diagonal(vp, x, steps).values
                           for x in range(g.n)])
    decay = DecayCurve(steps.astype(float), per_point.max(axis=0), 0,
                       vp.kind)
    rng = np.random.default_rng(12)
    fields = [rng.standard_normal(g.n) for _ in range(6)]
    for x in (0, 27):
        spike = np.zeros(g.n)
        spike[x] = 1.0
        fields.append(spike)
    rep = randomwalk.nash_from_decay(g, vp, decay, fields)
    assert rep.passes
    evaluated = [e for e in rep.entries if not e.skipped]
    assert evaluated and all(np.isfinite(e.constant) for e in evaluated)


# --------------------------------------------------------------- spectra


def test_spectral_radius_of_tree_against_tridiagonal_reduction():
    # the radial reduction of the depth-6 tree walk is a (depth+1)-point
    # birth-death chain whose top eigenvalue LAPACK can do exactly
    depth = 6
    off = np.array([0.5] + [np.sqrt(3.0) / 4.0] * (depth - 1))
    want = eigvalsh_tridiagonal(np.zeros(depth + 1), off)[-1]
    tree = zoo.regular_tree(4, depth)
    rho, iters = spectral_radius(pure_srw(tree, ambient_degree=4))
    assert rho == pytest.approx(want, abs=1e-7)
    assert iters > 0


def test_lattice_radius_below_one_and_growing():
    rhos = []
    for L in (8, 16):
        rho, _ = spectral_radius(pure_srw(zoo.grid(2, L), ambient_degree=4))
        assert rho < 1.0
        rhos.append(rho)
    assert rhos[0] < rhos[1]


def test_dirichlet_radius_monotone_in_subset():
    vp = lazy_srw(zoo.path(30), 1.0)
    inner, _ = dirichlet_spectral_radius(vp, list(range(10, 16)))
    outer, _ = dirichlet_spectral_radius(vp, list(range(5, 25)))
    whole, _ = spectral_radius(vp)
    assert inner < outer <= whole + 1e-12


def test_exhaustion_radii_nondecreasing():
    vp = lazy_srw(zoo.path(40), 1.0)
    subsets = [list(range(20 - k, 20 + k)) for k in (3, 6, 12, 19)]
    rhos = exhaustion_radii(vp, subsets)
    assert all(a <= b + 1e-12 for a, b in zip(rhos, rhos[1:]))
