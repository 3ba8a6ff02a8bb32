"""Gradients at a scale, Laplacians, Dirichlet eigenvalues, energy identities,
and the co-area sandwich.

Three gradient notions live here, all pointwise nonnegative fields:

* ``grad_sup(f, h)``: largest deviation of f over the closed ball B(x, h);
* ``grad_lp(f, h, p)``: ball-averaged p-mean deviation,
  ``((1/V(x,h)) sum_{B(x,h)} |f(y)-f(x)|^p mu(y))^(1/p)``;
* ``grad_viewpoint(vp, f, p)``: p-mean deviation against the kernel row,
  ``(sum_y |f(y)-f(x)|^p p_x(y) mu(y))^(1/p)``.

Energy identities here carry a factor 1/2 relative to the naive pairing:
for a symmetric viewpoint, direct expansion of the double sum gives

    sum_xy |f(y)-f(x)|^2 p_x(y) mu(x) mu(y) = 2 <(I-P)f, f>_mu,

so ``energy`` asserts gradient_norm_sq == 2 * dirichlet and
``p2_energy_identity`` asserts its lhs == 2 * rhs. The Dirichlet eigenvalue
follows the Rayleigh-quotient definition literally and therefore equals
2 * lambda_min(I - P restricted to the subset); both numbers are reported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix, diags
from scipy.sparse.linalg import eigsh

from coarsecalc.space import doubling_profile
from coarsecalc.viewpoint import apply as vp_apply
from coarsecalc.viewpoint import is_symmetric

EIG_RESIDUAL_TOL = 1e-10
ENERGY_IDENTITY_RTOL = 1e-10
DENSE_EIG_LIMIT = 2000


def _check_field(space, f):
    f = np.asarray(f, dtype=float)
    if f.shape != (space.n,):
        raise ValueError(f"field must have shape ({space.n},), got {f.shape}")
    return f


def lp_norm(space, f, p):
    """||f||_p with respect to the space measure; p may be inf."""
    if p < 1:
        raise ValueError(f"norm exponent must be >= 1, got {p}")
    f = _check_field(space, f)
    if np.isinf(p):
        return float(np.abs(f).max())
    return float(np.sum(np.abs(f) ** p * space.measure) ** (1.0 / p))


# ----------------------------------------------------------------------
# gradients


def grad_sup(space, f, h):
    """|grad f|_h(x) = sup over B(x,h) of |f(y) - f(x)|."""
    if h < 0:
        raise ValueError(f"scale must be >= 0, got {h}")
    f = _check_field(space, f)
    out = np.zeros(space.n)
    for x, ball in enumerate(space.ball_rows(h)):
        out[x] = np.abs(f[ball] - f[x]).max()
    return out


def grad_lp(space, f, h, p):
    """Ball-averaged p-mean deviation; p = inf reduces to grad_sup."""
    if p < 1:
        raise ValueError(f"exponent must be >= 1, got {p}")
    if np.isinf(p):
        return grad_sup(space, f, h)
    if h <= 0:
        raise ValueError(f"scale must be > 0, got {h}")
    f = _check_field(space, f)
    out = np.zeros(space.n)
    for x, ball in enumerate(space.ball_rows(h)):
        w = space.measure[ball]
        dev = np.abs(f[ball] - f[x]) ** p
        out[x] = (dev @ w / w.sum()) ** (1.0 / p)
    return out


def grad_viewpoint(vp, f, p):
    """Kernel-averaged p-mean deviation; p = inf takes the sup over the
    row support {y : p_x(y) > 0}."""
    if p < 1:
        raise ValueError(f"exponent must be >= 1, got {p}")
    f = _check_field(vp.space, f)
    out = np.zeros(vp.space.n)
    for x in range(vp.space.n):
        sup, dens = vp.row(x)
        dev = np.abs(f[sup] - f[x])
        if np.isinf(p):
            out[x] = dev.max() if sup.size else 0.0
        else:
            out[x] = (np.sum(dev ** p * dens * vp.space.measure[sup])
                      ) ** (1.0 / p)
    return out


@dataclass(frozen=True)
class FiberGradient:
    """Differences f(x) - f(y) on the pairs {d(x, y) <= h}, stored per row.

    Antisymmetric on its domain and zero on the diagonal; the row-wise
    maximum of |values| is exactly grad_sup.
    """

    h: float
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray

    def row(self, x):
        sl = slice(self.indptr[x], self.indptr[x + 1])
        return self.indices[sl], self.values[sl]

    def sup_reduction(self):
        n = self.indptr.size - 1
        out = np.zeros(n)
        for x in range(n):
            _, v = self.row(x)
            if v.size:
                out[x] = np.abs(v).max()
        return out

    def antisymmetry_defect(self):
        """max over stored pairs of |value(x,y) + value(y,x)| (0 if exact)."""
        n = self.indptr.size - 1
        rows = np.repeat(np.arange(n), np.diff(self.indptr))
        m = csr_matrix((self.values, (rows, self.indices)), shape=(n, n))
        s = m + m.T
        return float(np.abs(s.data).max()) if s.nnz else 0.0


def fiber_gradient(space, f, h) -> FiberGradient:
    """Materialize f(x) - f(y) over all pairs at distance <= h."""
    if h < 0:
        raise ValueError(f"scale must be >= 0, got {h}")
    f = _check_field(space, f)
    indptr = np.zeros(space.n + 1, dtype=np.int64)
    indices = []
    values = []
    for x, ball in enumerate(space.ball_rows(h)):
        indices.append(ball)
        values.append(f[x] - f[ball])
        indptr[x + 1] = indptr[x] + ball.size
    return FiberGradient(float(h), indptr, np.concatenate(indices),
                         np.concatenate(values))


# ----------------------------------------------------------------------
# Laplacians and spectra


def laplacian(vp, f, p=2):
    """p-Laplacian; p=2 is exactly f - Pf, general p > 1 is the odd power
    nonlinearity sum_y |f(x)-f(y)|^(p-2) (f(x)-f(y)) p_x(y) mu(y).

    The sign convention makes the operator positive-semidefinite against f
    (consistent with (I - P) at p=2).
    """
    if p <= 1:
        raise ValueError(f"p-Laplacian needs p > 1, got {p}")
    f = _check_field(vp.space, f)
    if p == 2:
        return f - vp_apply(vp, f)
    out = np.zeros(vp.space.n)
    for x in range(vp.space.n):
        sup, dens = vp.row(x)
        t = f[x] - f[sup]
        mag = np.abs(t)
        term = np.where(mag > 0, mag ** (p - 2) * t, 0.0)
        out[x] = np.sum(term * dens * vp.space.measure[sup])
    return out


def _require_symmetric(vp, who):
    rep = is_symmetric(vp)
    if not rep.symmetric:
        raise ValueError(f"{who} requires a symmetric viewpoint; worst pair "
                         f"({rep.x},{rep.y}) differs by {rep.gap:g}")


@dataclass(frozen=True)
class DirichletResult:
    """Rayleigh-quotient eigenvalue of a subset with its minimizer.

    ``delta`` is the infimum of ||grad_{P,2} f||_2^2 / ||f||_2^2 over fields
    supported in the subset; ``lambda_min`` is the smallest eigenvalue of
    (I - P) restricted to the subset, and delta == 2 * lambda_min.
    """

    delta: float
    lambda_min: float
    field: np.ndarray


def dirichlet_eigenvalue(vp, A) -> DirichletResult:
    """Smallest Rayleigh quotient over fields supported in A, with minimizer.

    Conjugating the transition matrix by sqrt(mu) gives the symmetric matrix
    M[x,y] = p_x(y) sqrt(mu(x) mu(y)); on the subset, delta = 2 (1 - lambda_max(M_A)).
    Dense solve for |A| <= 2000, Lanczos above, residual checked to 1e-10.
    """
    _require_symmetric(vp, "dirichlet_eigenvalue")
    idx = A.indices if hasattr(A, "indices") else np.asarray(A, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("subset must be nonempty")
    M = vp.symmetric_matrix().tocsr()
    MA = M[idx][:, idx]
    if idx.size == 1:
        lam = float(MA[0, 0])
        g = np.array([1.0])
    elif idx.size <= DENSE_EIG_LIMIT:
        w, v = np.linalg.eigh(MA.toarray())
        lam = float(w[-1])
        g = v[:, -1]
    else:
        w, v = eigsh(MA, k=1, which="LA")
        lam = float(w[0])
        g = v[:, 0]
    resid = np.linalg.norm(MA @ g - lam * g)
    if resid > EIG_RESIDUAL_TOL * max(1.0, abs(lam)):
        raise ArithmeticError(f"eigensolver residual {resid:g} exceeds "
                              f"{EIG_RESIDUAL_TOL:g}")
    mu = vp.space.measure
    f = np.zeros(vp.space.n)
    f[idx] = g / np.sqrt(mu[idx])
    f /= np.sqrt(np.sum(f * f * mu))
    lam_min = 1.0 - lam
    return DirichletResult(2.0 * lam_min, lam_min, f)


# ----------------------------------------------------------------------
# energy identities


def energy(vp, f):
    """(<(I-P)f, f>_mu, ||grad_{P,2} f||_2^2); asserts the second equals
    twice the first (to 1e-10 relative)."""
    _require_symmetric(vp, "energy")
    f = _check_field(vp.space, f)
    mu = vp.space.measure
    dirichlet = float(np.sum((f - vp_apply(vp, f)) * f * mu))
    g = grad_viewpoint(vp, f, 2)
    grad_sq = float(np.sum(g * g * mu))
    scale = max(abs(dirichlet), abs(grad_sq), 1e-300)
    if abs(grad_sq - 2.0 * dirichlet) > ENERGY_IDENTITY_RTOL * scale:
        raise ArithmeticError(
            f"energy identity violated: ||grad||^2 = {grad_sq!r} vs "
            f"2 <(I-P)f, f> = {2 * dirichlet!r}")
    return dirichlet, grad_sq


def p2_energy_identity(vp, f):
    """(||grad_{P^2,2} f||_2^2, ||f||_2^2 - ||Pf||_2^2); asserts lhs == 2*rhs.

    The two-step kernel is the density product D diag(mu) D; no certificate
    is needed for the identity, only the density matrix.
    """
    _require_symmetric(vp, "p2_energy_identity")
    f = _check_field(vp.space, f)
    mu = vp.space.measure
    dens2 = vp.dens @ diags(mu) @ vp.dens
    lhs = 0.0
    dens2 = csr_matrix(dens2)
    for x in range(vp.space.n):
        sl = slice(dens2.indptr[x], dens2.indptr[x + 1])
        sup = dens2.indices[sl]
        dev = f[sup] - f[x]
        lhs += mu[x] * np.sum(dev * dev * dens2.data[sl] * mu[sup])
    pf = vp_apply(vp, f)
    rhs = float(np.sum(f * f * mu) - np.sum(pf * pf * mu))
    scale = max(abs(lhs), abs(rhs), 1e-300)
    if abs(lhs - 2.0 * rhs) > ENERGY_IDENTITY_RTOL * scale:
        raise ArithmeticError(f"two-step energy identity violated: "
                              f"lhs = {lhs!r} vs 2 rhs = {2 * rhs!r}")
    return float(lhs), rhs


# ----------------------------------------------------------------------
# co-area


def coarea(space, f, h):
    """Threshold-sum sandwich (T/2, integral of |grad f|_h, T).

    T = sum over consecutive distinct values v_{i-1} < v_i of f of
    (v_i - v_{i-1}) * mu(boundary_h {f >= v_i}), which is the exact integral
    of t -> mu(boundary_h {f >= t}) because f takes finitely many values.
    """
    from coarsecalc.space import boundary

    f = _check_field(space, f)
    if np.any(f < 0):
        raise ValueError("coarea expects a nonnegative field")
    mid = float(np.sum(grad_sup(space, f, h) * space.measure))
    vals = np.unique(f)
    T = 0.0
    for i in range(1, vals.size):
        level = np.flatnonzero(f >= vals[i])
        T += (vals[i] - vals[i - 1]) * boundary(space, level, h).measure
    lower, upper = T / 2.0, T
    tol = 1e-12 * max(1.0, upper)
    if not (lower <= mid + tol and mid <= upper + tol):
        raise ArithmeticError(f"co-area sandwich violated: "
                              f"{lower!r} <= {mid!r} <= {upper!r}")
    return lower, mid, upper


# ----------------------------------------------------------------------
# comparison reports (sandwich and smoothing)


@dataclass(frozen=True)
class SandwichReport:
    """Pointwise gradient comparison for one field and one viewpoint.

    Arrays: kappa * grad_lp(q) <= grad_vp(q) <= grad_vp(q2) <= grad_sup(A*h),
    where kappa(x) = (c * V(x, h))^(1/q) from the certificate (A, c).
    """

    holds: bool
    lower: np.ndarray
    vp_q: np.ndarray
    vp_q2: np.ndarray
    upper: np.ndarray


def sandwich_report(vp, f, q, q2, slack=1e-12) -> SandwichReport:
    """Check the pointwise gradient sandwich for exponents q <= q2."""
    if q > q2:
        raise ValueError(f"need q <= q2, got {q} > {q2}")
    space = vp.space
    f = _check_field(space, f)
    V = np.array([space.measure[b].sum() for b in space.ball_rows(vp.h)])
    if np.isinf(q):
        kappa = np.ones(space.n)
    else:
        kappa = (vp.c * V) ** (1.0 / q)
    lower = kappa * grad_lp(space, f, vp.h, q)
    mid1 = grad_viewpoint(vp, f, q)
    mid2 = grad_viewpoint(vp, f, q2)
    upper = grad_sup(space, f, vp.A * vp.h)
    tol = slack * max(1.0, float(np.abs(f).max()))
    holds = bool(np.all(lower <= mid1 + tol) and np.all(mid1 <= mid2 + tol)
                 and np.all(mid2 <= upper + tol))
    return SandwichReport(holds, lower, mid1, mid2, upper)


@dataclass(frozen=True)
class SmoothingReport:
    """Measured constant in |grad Pf|_h <= C |grad f|_{2h,1} vs the
    doubling-derived bound C_h (C_{2h} + 1)."""

    measured: float
    bound: float
    holds: bool


def smoothing_report(space, f, h) -> SmoothingReport:
    """Measure the smoothing constant of the standard viewpoint at scale h.

    The right-hand side lives at scale 2h: averaging Pf over B(y, h) for
    y in B(x, h) only sees f inside B(x, 2h), and a field varying just
    outside B(x, h) defeats any pointwise bound against |grad f|_{h,1}.
    Points where the rhs vanishes have lhs = 0 as well (f is constant on
    B(x, 2h) there) and are skipped.
    """
    from coarsecalc.viewpoint import standard_viewpoint

    f = _check_field(space, f)
    vp = standard_viewpoint(space, h)
    lhs = grad_sup(space, vp_apply(vp, f), h)
    rhs = grad_lp(space, f, 2 * h, 1)
    pos = rhs > 0
    measured = float((lhs[pos] / rhs[pos]).max()) if np.any(pos) else 0.0
    ch, c2h = (r.constant for r in doubling_profile(space, [h, 2 * h]))
    bound = ch * (c2h + 1.0)
    return SmoothingReport(measured, float(bound), measured <= bound + 1e-9)


# ----------------------------------------------------------------------
# quadratic forms (used by the profile machinery for exact p=2 quotients)


def _pair_form(rows, cols, w, n):
    """Assemble Q with f^T Q f = sum w_k (f(rows_k) - f(cols_k))^2."""
    data = np.concatenate([w, w, -w, -w])
    r = np.concatenate([rows, cols, rows, cols])
    c = np.concatenate([rows, cols, cols, rows])
    return csr_matrix((data, (r, c)), shape=(n, n))


def l2_gradient_form(space, h):
    """Sparse Q with f^T Q f = ||grad_lp(f, h, 2)||_{2,mu}^2 exactly."""
    rows, cols, w = [], [], []
    mu = space.measure
    for x, ball in enumerate(space.ball_rows(h)):
        v = mu[ball].sum()
        rows.append(np.full(ball.size, x))
        cols.append(ball)
        w.append(mu[x] * mu[ball] / v)
    return _pair_form(np.concatenate(rows), np.concatenate(cols),
                      np.concatenate(w), space.n)


def viewpoint_l2_form(vp):
    """Sparse Q with f^T Q f = ||grad_viewpoint(f, 2)||_{2,mu}^2 exactly."""
    space = vp.space
    mu = space.measure
    rows, cols, w = [], [], []
    for x in range(space.n):
        sup, dens = vp.row(x)
        rows.append(np.full(sup.size, x))
        cols.append(sup)
        w.append(mu[x] * dens * mu[sup])
    return _pair_form(np.concatenate(rows), np.concatenate(cols),
                      np.concatenate(w), space.n)
