"""Gradients, energy identities, coarea, Dirichlet quotients, comparisons."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coarsecalc import calculus, zoo
from coarsecalc.randomwalk import lazy_srw
from coarsecalc.viewpoint import random_symmetric_viewpoint, standard_viewpoint


def test_lp_norm_pinned():
    space = zoo.path(2)
    f = np.array([3.0, 4.0])
    assert calculus.lp_norm(space, f, 2) == pytest.approx(5.0)
    assert calculus.lp_norm(space, f, 1) == pytest.approx(7.0)
    assert calculus.lp_norm(space, f, np.inf) == pytest.approx(4.0)


def test_grad_sup_of_indicator():
    space = zoo.path(10)
    f = np.zeros(10)
    f[:5] = 1.0
    g = calculus.grad_sup(space, f, 1.0)
    # only the two rim points see a jump inside their radius-1 ball
    np.testing.assert_allclose(g, [0, 0, 0, 0, 1, 1, 0, 0, 0, 0])


def test_grad_lp_between_zero_and_sup():
    space = zoo.grid(2, 6)
    rng = np.random.default_rng(0)
    f = rng.standard_normal(space.n)
    sup = calculus.grad_sup(space, f, 1.0)
    for p in (1.0, 2.0, 4.0):
        g = calculus.grad_lp(space, f, 1.0, p)
        assert np.all(g <= sup + 1e-12)
        assert np.all(g >= 0)


def test_energy_identity_pinned_three_points():
    # by hand on the 3-point path with the uniform-floor lazy kernel:
    # P = [[2/3,1/3,0],[1/3,1/3,1/3],[0,1/3,2/3]], so f = (1, 0, -1) gives
    # (I-P)f = (1/3, 0, -1/3) and a Dirichlet form of 2/3.
    space = zoo.path(3)
    vp = lazy_srw(space, 1.0)
    dirichlet, grad_sq = calculus.energy(vp, np.array([1.0, 0.0, -1.0]))
    assert dirichlet == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert grad_sq == pytest.approx(4.0 / 3.0, abs=1e-12)


def test_two_step_identity_small():
    space = zoo.path(3)
    vp = lazy_srw(space, 1.0)
    f = np.array([1.0, 0.0, -1.0])
    lhs, rhs = calculus.p2_energy_identity(vp, f)
    assert lhs == pytest.approx(2.0 * rhs, rel=1e-12)


def test_energy_requires_symmetry():
    space = zoo.path(5).with_measure(np.array([1.0, 3, 1, 1, 1]))
    vp = standard_viewpoint(space, 1.0)
    with pytest.raises(ValueError, match="symmetric"):
        calculus.energy(vp, np.ones(5))


@given(st.integers(0, 2 ** 32 - 1))
def test_energy_identity_random_kernels(seed):
    rng = np.random.default_rng(seed)
    space = zoo.random_geometric(20, seed=seed % 1000)
    vp = random_symmetric_viewpoint(space, 0.3, rng)
    f = rng.standard_normal(space.n)
    dirichlet, grad_sq = calculus.energy(vp, f)   # self-asserting
    assert grad_sq == pytest.approx(2.0 * dirichlet, rel=1e-9, abs=1e-12)


def test_coarea_indicator_hits_upper_bound():
    space = zoo.path(10)
    f = np.zeros(10)
    f[3:6] = 1.0
    lower, mid, upper = calculus.coarea(space, f, 1.0)
    # indicator of {3,4,5}: boundary measure 4, sup-gradient total 4
    assert upper == pytest.approx(4.0)
    assert mid == pytest.approx(upper)
    assert lower == pytest.approx(2.0)


def test_coarea_rejects_negative_fields():
    with pytest.raises(ValueError, match="nonnegative"):
        calculus.coarea(zoo.path(5), np.array([1.0, -1, 0, 0, 0]), 1.0)


@given(st.integers(0, 10 ** 6))
def test_coarea_sandwich_random_fields(seed):
    rng = np.random.default_rng(seed)
    space = zoo.grid(2, 4)
    f = rng.random(space.n)
    lower, mid, upper = calculus.coarea(space, f, 1.0)
    assert lower <= mid + 1e-12 and mid <= upper + 1e-12


def test_laplacian_annihilates_constants():
    vp = standard_viewpoint(zoo.grid(2, 5), 1.0)
    out = calculus.laplacian(vp, np.full(25, 7.0))
    np.testing.assert_allclose(out, 0.0, atol=1e-12)


def test_laplacian_positive_against_field():
    vp = standard_viewpoint(zoo.path(8), 1.0)
    rng = np.random.default_rng(3)
    for _ in range(5):
        f = rng.standard_normal(8)
        for p in (2, 3.0):
            val = np.sum(calculus.laplacian(vp, f, p=p) * f
                         * vp.space.measure)
            assert val >= -1e-10


def test_dirichlet_eigenvalue_monotone_in_domain():
    vp = lazy_srw(zoo.path(20), 1.0)
    small = calculus.dirichlet_eigenvalue(vp, list(range(5, 9)))
    large = calculus.dirichlet_eigenvalue(vp, list(range(3, 15)))
    assert 0 < large.delta < small.delta
    assert small.delta == pytest.approx(2.0 * small.lambda_min, rel=1e-12)


def test_sandwich_report_holds_across_exponents():
    space = zoo.random_geometric(30, seed=21)
    vp = standard_viewpoint(space, 0.3)
    rng = np.random.default_rng(4)
    for q, q2 in ((1.0, 2.0), (2.0, np.inf), (1.0, np.inf)):
        rep = calculus.sandwich_report(vp, rng.standard_normal(space.n),
                                       q, q2)
        assert rep.holds


def test_smoothing_report_bound():
    space = zoo.grid(2, 8)
    rng = np.random.default_rng(6)
    rep = calculus.smoothing_report(space, rng.standard_normal(space.n), 1.0)
    assert rep.holds
    assert rep.measured <= rep.bound + 1e-9


def test_fiber_gradient_consistency():
    space = zoo.path(9)
    f = np.arange(9.0) ** 2
    fg = calculus.fiber_gradient(space, f, 1.0)
    assert fg.antisymmetry_defect() == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(fg.sup_reduction(),
                               calculus.grad_sup(space, f, 1.0), atol=1e-12)
