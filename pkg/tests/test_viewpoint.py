"""Viewpoint construction, validation, symmetry, composition, persistence."""

import numpy as np
import pytest
from scipy.sparse import csr_matrix

from coarsecalc import zoo
from coarsecalc.viewpoint import (
    Certificate,
    Violation,
    apply,
    compose,
    is_symmetric,
    load_viewpoint,
    random_symmetric_viewpoint,
    save_viewpoint,
    standard_viewpoint,
    symmetrize,
    validate,
)


@pytest.fixture
def path6():
    return zoo.path(6)


def test_standard_viewpoint_rows_are_probabilities(path6):
    vp = standard_viewpoint(path6, 1.0)
    P = vp.transition_matrix()
    np.testing.assert_allclose(np.asarray(P.sum(axis=1)).ravel(), 1.0,
                               atol=1e-12)
    assert vp.certificate.A >= 1.0
    assert vp.certificate.c > 0.0


def test_standard_viewpoint_uniform_on_balls(path6):
    vp = standard_viewpoint(path6, 1.0)
    sup, dens = vp.row(2)
    assert sorted(sup.tolist()) == [1, 2, 3]
    np.testing.assert_allclose(dens, 1.0 / 3.0)


def test_validate_raises_on_negative_density(path6):
    vp = standard_viewpoint(path6, 1.0)
    dens = vp.dens.toarray()
    dens[0, 0], dens[0, 1] = -0.5, 1.5
    with pytest.raises(ValueError, match="negative"):
        validate(path6, csr_matrix(dens), 1.0)


def test_validate_raises_on_mass_defect(path6):
    vp = standard_viewpoint(path6, 1.0)
    dens = vp.dens.toarray() * 0.9
    with pytest.raises(ValueError, match="probability"):
        validate(path6, csr_matrix(dens), 1.0)


def test_validate_reports_far_support_through_a(path6):
    # declaring a smaller scale than the kernel actually uses is legal;
    # the certificate absorbs it into the support factor A
    wide = standard_viewpoint(path6, 2.0)
    out = validate(path6, wide.dens, 1.0)
    assert isinstance(out, Certificate)
    assert out.A == pytest.approx(2.0)


def test_validate_flags_zero_density_inside_ball(path6):
    dens = np.zeros((6, 6))
    np.fill_diagonal(dens, 1.0)   # point masses never cover B(x, 1)
    out = validate(path6, csr_matrix(dens), 1.0)
    assert isinstance(out, Violation)
    assert out.axiom == "density floor"


def test_validate_accepts_standard(path6):
    vp = standard_viewpoint(path6, 1.0)
    out = validate(path6, vp.dens, 1.0)
    assert isinstance(out, Certificate)
    assert out.A == pytest.approx(vp.certificate.A)


def test_standard_not_symmetric_on_nonuniform_measure():
    space = zoo.path(6).with_measure(np.array([1.0, 2, 1, 1, 1, 1]))
    rep = is_symmetric(standard_viewpoint(space, 1.0))
    assert not rep.symmetric
    assert rep.gap > 0


def test_random_symmetric_viewpoint_is_symmetric():
    space = zoo.random_geometric(25, seed=2)
    vp = random_symmetric_viewpoint(space, 0.3, np.random.default_rng(5))
    assert is_symmetric(vp).symmetric


def test_symmetrize_reweights_by_ball_volume(path6):
    vp = standard_viewpoint(path6, 1.0)
    sym, reweighted = symmetrize(path6, vp)
    np.testing.assert_allclose(reweighted.measure, [2, 3, 3, 3, 3, 2])
    assert is_symmetric(sym).symmetric


def test_compose_is_matrix_product(path6):
    vp = standard_viewpoint(path6, 1.0)
    two = compose(vp, vp)
    direct = vp.transition_matrix() @ vp.transition_matrix()
    np.testing.assert_allclose(two.transition_matrix().toarray(),
                               direct.toarray(), atol=1e-12)
    # certified at the largest grid scale below h+h: 2 * 2^(-1/4)
    assert two.h == pytest.approx(2.0 * 2.0 ** -0.25)
    assert two.kind == "composed"
    assert two.certificate.A * two.h >= 2.0 - 1e-12


def test_apply_preserves_constants(path6):
    vp = standard_viewpoint(path6, 1.0)
    out = apply(vp, np.full(6, 3.25))
    np.testing.assert_allclose(out, 3.25, atol=1e-12)


def test_viewpoint_roundtrip(tmp_path, path6):
    vp = standard_viewpoint(path6, 1.0)
    p = tmp_path / "vp.json"
    save_viewpoint(vp, p)
    back = load_viewpoint(p, path6)
    np.testing.assert_allclose(back.dens.toarray(), vp.dens.toarray(),
                               atol=1e-15)
    assert back.h == vp.h
