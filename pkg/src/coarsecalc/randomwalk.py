"""Kernel iteration, return-probability decay, the gamma transform, and
spectral radii.

Walk builders
-------------
``lazy_srw(space, h)`` is the uniform closed-ball walk made stochastic by a
lazy diagonal: every point within h receives the same density floor
c0 = 1/max_x V(x,h) and the diagonal absorbs each row's remainder. It is a
certified symmetric viewpoint (A = 1, c = c0).

``pure_srw(space, ambient_degree=None, step=1.0)`` is the plain nearest-
neighbour walk: probability 1/ambient_degree to each neighbour at distance
<= step. Rows at the boundary are substochastic (the walk leaks where the
ambient graph continues but the finite sample stops); that is exactly the
Dirichlet compression of the infinite-space walk, which is what the
spectral-radius diagnostics want. It is *not* a viewpoint (no diagonal
mass, no density floor), so it carries certificate=None and only the
spectral functions accept it.

On-diagonal decay uses the symmetric-kernel identity
p^{2n}_x(x) = sum_y (p^n_x(y))^2 mu(y), cross-checked against a direct
2n-step iteration at the smallest grid point.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from typing import Optional

import numpy as np
from scipy.integrate import quad
from scipy.sparse import csr_matrix

from coarsecalc.viewpoint import Certificate, Viewpoint, is_symmetric

MASS_TOL = 1e-10
POWER_TOL = 1e-10
ROUNDTRIP_RTOL = 1e-8
QUAD_RTOL = 1e-9

# c grid for decay domination: 2^(k/4), k = -48..24
C_GRID = [2.0 ** (k / 4.0) for k in range(-48, 25)]


def lazy_srw(space, h) -> Viewpoint:
    """Uniform-floor lazy walk at scale h; a certified symmetric viewpoint."""
    if h <= 0:
        raise ValueError(f"scale must be > 0, got {h}")
    mu = space.measure
    vols = np.empty(space.n)
    rows = []
    for x, ball in enumerate(space.ball_rows(h)):
        vols[x] = mu[ball].sum()
        rows.append(ball)
    c0 = 1.0 / vols.max()
    indptr = np.zeros(space.n + 1, dtype=np.int64)
    indices = np.concatenate(rows)
    data = np.full(indices.size, c0)
    for x, ball in enumerate(rows):
        indptr[x + 1] = indptr[x] + ball.size
        at_x = indptr[x] + int(np.searchsorted(ball, x))
        data[at_x] = c0 + (1.0 - c0 * vols[x]) / mu[x]
    dens = csr_matrix((data, indices, indptr), shape=(space.n, space.n))
    return Viewpoint(space, h, dens, Certificate(1.0, c0), kind="lazy_srw")


def pure_srw(space, ambient_degree=None, step=1.0) -> Viewpoint:
    """Nearest-neighbour walk, substochastic at the sample boundary.

    ``ambient_degree`` defaults to the largest neighbour count in the
    sample (correct for grid boxes and group-ball truncations, whose
    interior realizes the ambient degree).
    """
    neigh = _neighbor_rows(space, step)
    if ambient_degree is None:
        ambient_degree = max(b.size for b in neigh)
    if ambient_degree <= 0:
        raise ValueError("ambient degree must be positive")
    mu = space.measure
    indptr = np.zeros(space.n + 1, dtype=np.int64)
    indices = np.concatenate([b for b in neigh]) if space.n else np.array([])
    data = []
    for x, b in enumerate(neigh):
        indptr[x + 1] = indptr[x] + b.size
        data.append(1.0 / (ambient_degree * mu[b]))
    dens = csr_matrix((np.concatenate(data), indices, indptr),
                      shape=(space.n, space.n))
    return Viewpoint(space, float(step), dens, None, kind="pure_srw")


def _neighbor_rows(space, step):
    """B(x, step) minus x for every x.

    Graph-backed spaces whose lightest edge exceeds step/2 admit a direct
    adjacency read (no two-hop path can fit inside step), which matters
    on trees far too large for a per-point Dijkstra sweep.
    """
    G = space.graph_csr
    if G is not None and G.data.min() > step / 2.0:
        out = []
        for x in range(space.n):
            lo, hi = G.indptr[x], G.indptr[x + 1]
            cols = G.indices[lo:hi]
            out.append(np.sort(cols[G.data[lo:hi] <= step]))
        return out
    return [ball[ball != x]
            for x, ball in enumerate(space.ball_rows(step))]


# ----------------------------------------------------------------------
# iteration and decay


def iterate(vp, x0, n_max):
    """Densities p^n_{x0} for n = 0..n_max as an (n_max+1, N) array.

    Each slice must integrate to 1 against mu (checked to 1e-10); a
    substochastic kernel is rejected here by that check.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    space = vp.space
    mu = space.measure
    out = np.zeros((n_max + 1, space.n))
    out[0, x0] = 1.0 / mu[x0]
    densT = vp.dens.T.tocsr()
    for n in range(1, n_max + 1):
        out[n] = densT @ (out[n - 1] * mu)
        mass = float(out[n] @ mu)
        if abs(mass - 1.0) > MASS_TOL:
            raise ArithmeticError(f"mass drifted to {mass!r} at step {n}; "
                                  "kernel is not stochastic")
    return out


@dataclass(frozen=True)
class DecayCurve:
    """Even-step return densities u(n) = p^{2n}_x(x) on a step grid."""

    times: np.ndarray
    values: np.ndarray
    x: int
    kernel: str

    def at(self, n):
        i = np.searchsorted(self.times, n)
        if i == self.times.size or self.times[i] != n:
            raise KeyError(f"step {n} not tabulated")
        return float(self.values[i])


def on_diagonal(vp, x, n_grid) -> DecayCurve:
    """p^{2n}_x(x) over the grid via the squared-density identity.

    Monotone nonincreasing and strictly positive for a symmetric stochastic
    kernel; both are enforced. The smallest grid point is cross-checked
    against a direct 2n-step iteration.
    """
    rep = is_symmetric(vp)
    if not rep.symmetric:
        raise ValueError(f"on_diagonal requires a symmetric viewpoint; "
                         f"worst pair ({rep.x},{rep.y}) gap {rep.gap:g}")
    n_grid = sorted(int(n) for n in n_grid)
    if not n_grid or n_grid[0] < 0:
        raise ValueError("need a nonempty grid of steps >= 0")
    mu = vp.space.measure
    dens = iterate(vp, x, n_grid[-1] if n_grid else 0)
    vals = np.array([float(np.sum(dens[n] ** 2 * mu)) for n in n_grid])
    if np.any(vals <= 0):
        raise ArithmeticError("return density vanished; kernel degenerate")
    if np.any(np.diff(vals) > 1e-12 * vals[:-1]):
        k = int(np.argmax(np.diff(vals) > 1e-12 * vals[:-1]))
        raise ArithmeticError(f"even-step decay not monotone at n={n_grid[k]}")
    # independent cross-check at the smallest grid point
    n0 = n_grid[0]
    direct = iterate(vp, x, 2 * n0)[2 * n0, x]
    if abs(direct - vals[0]) > 1e-10 * max(direct, vals[0], 1e-300):
        raise ArithmeticError(
            f"squared-density identity broke at n={n0}: {vals[0]!r} vs "
            f"direct {direct!r}")
    return DecayCurve(np.array(n_grid, dtype=float), vals, int(x), vp.kind)


# ----------------------------------------------------------------------
# gamma transform


@dataclass(frozen=True)
class GammaTransform:
    """Tabulated decay rate gamma with t = integral_{v_min}^{1/gamma(t)}
    phi(v)^2 dv/v."""

    t: np.ndarray
    gamma: np.ndarray
    v_min: float
    tail_estimate: float
    phi_kind: str

    def at(self, t):
        """Log-log interpolation between tabulated points."""
        t = np.asarray(t, dtype=float)
        lg = np.interp(np.log(t), np.log(self.t), np.log(self.gamma))
        out = np.exp(lg)
        return float(out) if out.ndim == 0 else out


def gamma_transform(phi, t_grid, v_min=None) -> GammaTransform:
    """Invert t = integral_{v_min}^{M} phi(v)^2 dv/v and set gamma = 1/M.

    With no explicit cutoff the integrand must be integrable at 0: the
    estimated below-cutoff tail has to stay under 1e-6 of the smallest t,
    otherwise the call errors out demanding an explicit v_min. Bisection is
    monotone; quadrature is adaptive with relative error 1e-9; the round
    trip integral reproduces each t to 1e-8 relative.
    """
    t_grid = np.asarray(sorted(float(t) for t in t_grid))
    if t_grid.size == 0 or t_grid[0] <= 0:
        raise ValueError("t grid must be positive")

    def integrand(v):
        return phi(v) ** 2 / v

    auto = v_min is None
    if auto:
        v_min = 1e-12
    v_min = float(v_min)
    if v_min <= 0:
        raise ValueError("v_min must be > 0")
    # estimate the contribution below the cutoff by geometric extrapolation
    tail = 0.0
    pieces = []
    lo = v_min
    for _ in range(8):
        piece = quad(integrand, lo / 2.0, lo, epsrel=QUAD_RTOL, limit=200)[0]
        pieces.append(piece)
        tail += piece
        lo /= 2.0
    if pieces[0] > 0 and pieces[-1] > 0:
        ratio = pieces[-1] / pieces[-2] if pieces[-2] > 0 else 1.0
        if ratio < 0.999:
            tail += pieces[-1] * ratio / (1.0 - ratio)
        else:
            tail = np.inf
    if auto and tail > 1e-6 * t_grid[0]:
        raise ValueError(
            f"phi^2(v)/v is not integrable near 0 (tail estimate {tail:g}); "
            "pass an explicit v_min cutoff")

    def seg(a, b):
        if b <= a:
            return 0.0
        return quad(integrand, a, b, epsrel=QUAD_RTOL, limit=400)[0]

    # March through the sorted t grid keeping a running lower bracket
    # (M_base, F_base) with F_base = integral from v_min to M_base, so each
    # bisection step only integrates a short segment.
    gammas = np.empty(t_grid.size)
    m_base, f_base = v_min, 0.0
    for i, t in enumerate(t_grid):
        lo, f_lo = m_base, f_base
        hi = max(2.0 * lo, 2.0 * v_min)
        f_hi = f_lo + seg(lo, hi)
        while f_hi < t:
            lo, f_lo = hi, f_hi
            hi *= 4.0
            if hi > 1e280:
                raise ValueError(f"t={t:g} unreachable: phi^2/v integral "
                                 "saturates below it")
            f_hi = f_lo + seg(lo, hi)
        for _ in range(200):
            mid = np.sqrt(lo * hi)
            f_mid = f_lo + seg(lo, mid)
            if f_mid >= t:
                hi = mid
            else:
                lo, f_lo = mid, f_mid
            if hi / lo < 1.0 + 1e-12:
                break
        M = hi
        got = quad(integrand, v_min, M, epsrel=QUAD_RTOL, limit=400)[0]
        if abs(got - t) > ROUNDTRIP_RTOL * t:
            raise ArithmeticError(f"gamma round-trip failed at t={t:g}: "
                                  f"integral {got!r}")
        gammas[i] = 1.0 / M
        m_base, f_base = lo, f_lo
    if np.any(np.diff(gammas) >= 0):
        raise ArithmeticError("gamma must be strictly decreasing")
    return GammaTransform(t_grid, gammas, v_min, float(tail), phi.kind)


# ----------------------------------------------------------------------
# decay vs profile


@dataclass
class DecayProfileReport:
    status: str                  # "ok" | "no_c_works" | "skipped_bounded_phi"
    best_c: Optional[float]
    slope_decay: Optional[float]
    slope_gamma: Optional[float]
    kept_n: np.ndarray
    decay: np.ndarray
    centers: list
    violating_n: Optional[int] = None
    meta: dict = dataclass_field(default_factory=dict)


def _diameter_estimate(space):
    d0 = space.dist_row(0)
    a = int(np.argmax(np.where(np.isfinite(d0), d0, -1.0)))
    da = space.dist_row(a)
    return float(np.max(da[np.isfinite(da)]))


def _fit_top_decade(ns, vals):
    hi = ns[-1]
    keep = ns >= hi / 10.0
    if keep.sum() < 2:
        keep = np.ones_like(ns, dtype=bool)
    return float(np.polyfit(np.log(ns[keep]), np.log(vals[keep]), 1)[0])


def decay_vs_profile(space, vp, phi, n_grid, centers=None) -> DecayProfileReport:
    """Compare measured return decay against the gamma transform of phi.

    Keeps the diffusive window n <= (L/4)^2 (L = grid side when the space
    carries grid metadata, else the diameter) before boundary effects bend
    the curve, fits log-log slopes over the top decade of the kept range,
    and searches the largest c in a quarter-step geometric grid with
    sup_x p^{2n}_x(x) <= gamma(c n) at every kept n.
    """
    if not phi.unbounded:
        return DecayProfileReport("skipped_bounded_phi", None, None, None,
                                  np.array([]), np.array([]), [],
                                  meta={"reason": "bounded rate function "
                                                  "cannot control decay"})
    if centers is None:
        if space.n > 512:
            raise ValueError("pass explicit centers for N > 512")
        centers = list(range(space.n))
    centers = [int(c) for c in centers]
    n_grid = np.array(sorted(int(n) for n in n_grid if n >= 1))
    if n_grid.size < 2:
        raise ValueError("need at least two steps >= 1 in the grid")
    L = space.meta.get("L") or _diameter_estimate(space)
    n_cap = max(4.0, (L / 4.0) ** 2)
    kept = n_grid[n_grid <= n_cap]
    if kept.size < 2:
        kept = n_grid
    curves = [on_diagonal(vp, x, kept) for x in centers]
    u = np.max(np.vstack([c.values for c in curves]), axis=0)

    t_lo = C_GRID[0] * kept[0]
    t_hi = C_GRID[-1] * kept[-1]
    gt = gamma_transform(phi, np.geomspace(t_lo, t_hi, 160),
                         v_min=1e-3 / space.total_measure)
    best_c, viol = None, None
    for c in C_GRID:
        bound = gt.at(c * kept)
        if np.all(u <= bound * (1.0 + 1e-12)):
            best_c = c
        else:
            if best_c is None:
                viol = int(kept[int(np.argmax(u > bound))])
    slope_u = _fit_top_decade(kept.astype(float), u)
    if best_c is not None:
        slope_g = _fit_top_decade(kept.astype(float), gt.at(best_c * kept))
        return DecayProfileReport("ok", best_c, slope_u, slope_g, kept, u,
                                  centers, meta={"n_cap": n_cap})
    slope_g = _fit_top_decade(kept.astype(float), gt.at(kept))
    return DecayProfileReport("no_c_works", None, slope_u, slope_g, kept, u,
                              centers, violating_n=viol,
                              meta={"n_cap": n_cap})


# ----------------------------------------------------------------------
# Nash from measured decay


@dataclass(frozen=True)
class NashFromDecayEntry:
    index: int
    skipped: bool
    n_star: Optional[int]
    constant: Optional[float]
    margin: Optional[float]
    passed: Optional[bool]


@dataclass(frozen=True)
class NashFromDecayReport:
    passes: bool
    entries: list
    log_derivative_ratio: float


def nash_from_decay(space, vp, decay: DecayCurve, fields) -> NashFromDecayReport:
    """Per-field Nash-type bound induced by a measured decay curve.

    Each field is normalized to ||f||_1 = 1. At steps n where
    gamma(n) < ||f||_2^2 the bound

        ||f||_2^2 <= (n / log(||f||_2^2 / gamma(n)) + 1) (||f||_2^2 - ||Pf||_2^2)

    is evaluated and the tightest n is reported with the induced constant;
    fields with gamma(n) >= ||f||_2^2 everywhere are skipped (too spread
    out for the tabulated range). The decay curve's regularity is
    summarized by max_n gamma(n)/gamma(2n) over tabulated doublings.
    """
    from coarsecalc.calculus import lp_norm
    from coarsecalc.viewpoint import apply as vp_apply

    rep = is_symmetric(vp)
    if not rep.symmetric:
        raise ValueError("nash_from_decay requires a symmetric viewpoint")
    mu = space.measure
    times = decay.times.astype(int)
    table = dict(zip(times.tolist(), decay.values.tolist()))
    ratio = 0.0
    for n in times:
        if 2 * n in table and table[2 * n] > 0:
            ratio = max(ratio, table[n] / table[2 * n])
    entries = []
    all_pass = True
    for i, f in enumerate(fields):
        f = np.asarray(f, dtype=float)
        n1 = lp_norm(space, f, 1)
        if n1 == 0:
            raise ValueError(f"field {i} is zero")
        f = f / n1
        u0 = lp_norm(space, f, 2) ** 2
        pf = vp_apply(vp, f)
        u1 = float(np.sum(pf * pf * mu))
        best = None
        for n, g in table.items():
            if n < 1 or g >= u0:
                continue
            c_n = n / np.log(u0 / g) + 1.0
            rhs = c_n * (u0 - u1)
            if best is None or rhs < best[1]:
                best = (n, rhs, c_n)
        if best is None:
            entries.append(NashFromDecayEntry(i, True, None, None, None,
                                              None))
            continue
        n_star, rhs, c_n = best
        ok = u0 <= rhs * (1.0 + 1e-9)
        all_pass = all_pass and ok
        entries.append(NashFromDecayEntry(i, False, int(n_star), float(c_n),
                                          float(rhs - u0), bool(ok)))
    return NashFromDecayReport(all_pass, entries, float(ratio))


# ----------------------------------------------------------------------
# spectral radius


def _power_lambda_max(M, tol=POWER_TOL, max_iter=200000):
    """Largest eigenvalue of a symmetric PSD-shifted matrix via power
    iteration with Rayleigh-quotient convergence; deterministic start."""
    n = M.shape[0]
    v = np.ones(n) + np.linspace(0.0, 1e-3, n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for it in range(1, max_iter + 1):
        w = M @ v
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0, it
        v_new = w / nw
        lam_new = float(v_new @ (M @ v_new))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new, it
        lam, v = lam_new, v_new
    raise ArithmeticError(f"power iteration did not converge in {max_iter} "
                          "steps")


def _sym_matrix(kernel):
    if isinstance(kernel, Viewpoint):
        rep = is_symmetric(kernel)
        if not rep.symmetric:
            raise ValueError("spectral radius requires symmetric densities; "
                             f"worst pair ({rep.x},{rep.y}) gap {rep.gap:g}")
        return kernel.symmetric_matrix().tocsr()
    M = csr_matrix(kernel)
    gap = abs(M - M.T)
    if gap.nnz and gap.max() > 1e-12:
        raise ValueError("spectral radius requires a symmetric matrix")
    return M


def spectral_radius(kernel):
    """(rho, iterations) of the self-adjoint operator on L2(mu).

    On a full finite stochastic symmetric kernel this is exactly 1
    (constants are fixed); the informative quantity is the Dirichlet
    compression to a proper subset, see dirichlet_spectral_radius.
    """
    M = _sym_matrix(kernel)
    return _rho_of(M)


def dirichlet_spectral_radius(kernel, A):
    """(rho_A, iterations): spectral radius of the kernel compressed to A.

    The finite-truncation proxy for an infinite space's spectral radius:
    rho_A increases along exhaustions and converges to it from below.
    """
    idx = A.indices if hasattr(A, "indices") else np.asarray(A, np.int64)
    M = _sym_matrix(kernel)[idx][:, idx]
    return _rho_of(M)


def _rho_of(M):
    from scipy.sparse import identity

    n = M.shape[0]
    if n == 1:
        return float(M[0, 0]), 1
    eye = identity(n, format="csr")
    hi, it1 = _power_lambda_max(M + eye)       # 1 + lambda_max
    lo, it2 = _power_lambda_max(eye - M)       # 1 - lambda_min
    return max(hi - 1.0, lo - 1.0), it1 + it2


def exhaustion_radii(kernel, subsets):
    """rho_A along a family of subsets, in the given order."""
    out = []
    for a in subsets:
        rho, _ = dirichlet_spectral_radius(kernel, a)
        out.append(rho)
    return out
