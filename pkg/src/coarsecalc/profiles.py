"""Isoperimetric profiles, Sobolev/Nash verification, and expansion
diagnostics.

The central quantity is the subset constant

    J_p(A) = sup over fields f supported in A of ||f||_p / ||grad f||_p,

where the gradient is selected by a :class:`Backend` (sup-gradient at a
scale, ball-averaged L^p gradient, or a viewpoint gradient) and all norms
are against the space measure. Exact values:

* p = 2 with a symmetric viewpoint or ball-average backend: smallest
  generalized eigenvalue of the gradient quadratic form (J_2 = lambda^-1/2);
* p = 1: indicator form, max over subsets B of A of mu(B) / (boundary or
  cut weight of B), enumerated exactly up to 18 points;
* p = inf: chain in-radius, the maximal number of support-relation steps
  needed to leave A (a BFS; the optimizer is the step-count field itself).

Everything else (other p, large subsets) is reported as a ``lower_bound``
with the search family documented in the curve metadata. A nonzero field
with vanishing gradient norm makes J infinite; that sentinel is returned
(never a silent large float) with the reason, and it is the expected answer
when A is the whole space or contains points isolated at the scale.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dataclass_field
from typing import Callable, Optional

import numpy as np
from scipy.sparse import csr_matrix

from coarsecalc.calculus import (
    dirichlet_eigenvalue, grad_lp, grad_sup, grad_viewpoint, lp_norm,
    l2_gradient_form, viewpoint_l2_form, DENSE_EIG_LIMIT)
from coarsecalc.space import boundary as boundary_at_scale
from coarsecalc.viewpoint import is_symmetric

EXACT_ENUM_LIMIT = 18
DESCENT_RESTARTS = 8
DESCENT_ITERS = 500
DESCENT_TOL = 1e-8


# ----------------------------------------------------------------------
# gradient backends


@dataclass(frozen=True)
class Backend:
    """Selects the gradient notion used by profile computations.

    kind "sup" and "lp" carry a scale h; kind "viewpoint" carries a
    Viewpoint (whose scale is vp.h).
    """

    kind: str
    h: Optional[float] = None
    vp: object = None

    @staticmethod
    def sup(h):
        return Backend("sup", h=float(h))

    @staticmethod
    def lp(h):
        return Backend("lp", h=float(h))

    @staticmethod
    def viewpoint(vp):
        return Backend("viewpoint", vp=vp)

    @property
    def scale(self):
        return self.vp.h if self.kind == "viewpoint" else self.h

    def gradient(self, space, f, p):
        if self.kind == "sup":
            return grad_sup(space, f, self.h)
        if self.kind == "lp":
            return grad_lp(space, f, self.h, p)
        if self.kind == "viewpoint":
            return grad_viewpoint(self.vp, f, p)
        raise ValueError(f"unknown backend kind {self.kind!r}")

    def pair_weights(self, space):
        """COO arrays (rows, cols, w) with ||grad 1_B||_1 = cut weight of B
        (sum of w over ordered pairs crossing the cut). None for "sup"."""
        if self.kind == "sup":
            return None
        mu = space.measure
        rows, cols, w = [], [], []
        if self.kind == "lp":
            for x, ball in enumerate(space.ball_rows(self.h)):
                v = mu[ball].sum()
                rows.append(np.full(ball.size, x))
                cols.append(ball)
                w.append(mu[x] * mu[ball] / v)
        else:
            for x in range(space.n):
                sup, dens = self.vp.row(x)
                rows.append(np.full(sup.size, x))
                cols.append(sup)
                w.append(mu[x] * dens * mu[sup])
        return (np.concatenate(rows), np.concatenate(cols), np.concatenate(w))

    def relation_rows(self, space):
        """Support relation {x ~ y} as a list of index arrays per row."""
        if self.kind == "viewpoint":
            return [self.vp.row(x)[0] for x in range(space.n)]
        return list(space.ball_rows(self.h))

    def describe(self):
        if self.kind == "viewpoint":
            return f"viewpoint(h={self.vp.h:g}, kind={self.vp.kind})"
        return f"{self.kind}(h={self.h:g})"


# ----------------------------------------------------------------------
# rate functions


class RateFunction:
    """A nonnegative nondecreasing rate v -> phi(v).

    Kinds: ``power`` (coef * v^exponent), ``log_power``
    (coef * v^b * (1 + log(1 + v))^a), ``tabulated`` (monotone linear
    interpolation, clamped to the end values outside the table). The
    generalized inverse is inf{v : phi(v) >= r} (+inf when phi stays
    below r, which is how boundedness surfaces in volume checks).
    """

    def __init__(self, kind, fn, params, unbounded, sup_value=None):
        self.kind = kind
        self._fn = fn
        self.params = params
        self.unbounded = unbounded
        self.sup_value = sup_value

    @staticmethod
    def power(exponent, coef=1.0):
        if exponent < 0 or coef <= 0:
            raise ValueError("power rate needs exponent >= 0 and coef > 0")
        return RateFunction(
            "power", lambda v: coef * np.asarray(v, dtype=float) ** exponent,
            {"exponent": exponent, "coef": coef}, exponent > 0,
            None if exponent > 0 else coef)

    @staticmethod
    def log_power(log_exp, pow_exp, coef=1.0):
        if coef <= 0:
            raise ValueError("coef must be > 0")

        def fn(v):
            v = np.asarray(v, dtype=float)
            return coef * v ** pow_exp * (1.0 + np.log1p(v)) ** log_exp

        probe = fn(np.geomspace(1e-9, 1e12, 64))
        if np.any(np.diff(probe) < -1e-12 * np.abs(probe[:-1])):
            raise ValueError("log_power parameters give a decreasing rate")
        unbounded = pow_exp > 0 or (pow_exp == 0 and log_exp > 0)
        return RateFunction("log_power", fn,
                            {"log_exp": log_exp, "pow_exp": pow_exp,
                             "coef": coef}, unbounded,
                            None if unbounded else float(probe[-1]))

    @staticmethod
    def tabulated(args, values):
        args = np.asarray(args, dtype=float)
        values = np.asarray(values, dtype=float)
        order = np.argsort(args)
        args, values = args[order], values[order]
        if np.any(values < 0):
            raise ValueError("tabulated rate must be nonnegative")
        if np.any(np.diff(values) < -1e-9 * np.maximum(values[:-1], 1e-300)):
            raise ValueError("tabulated rate must be nondecreasing")
        values = np.maximum.accumulate(values)  # wash out float dust

        def fn(v):
            return np.interp(np.asarray(v, dtype=float), args, values)

        return RateFunction("tabulated", fn,
                            {"args": args, "values": values}, False,
                            float(values[-1]))

    def __call__(self, v):
        out = self._fn(v)
        return float(out) if np.isscalar(v) else out

    def inverse(self, r):
        """Generalized inverse inf{v : phi(v) >= r}; +inf when unattained."""
        r = float(r)
        if self.kind == "power":
            e, c = self.params["exponent"], self.params["coef"]
            if e == 0:
                return 0.0 if c >= r else np.inf
            return (r / c) ** (1.0 / e)
        if self.kind == "tabulated":
            args, values = self.params["args"], self.params["values"]
            if r > values[-1]:
                return np.inf
            k = int(np.searchsorted(values, r, side="left"))
            if k == 0:
                return float(args[0]) if r <= values[0] else np.inf
            # linear interpolation on the segment reaching r
            v0, v1 = values[k - 1], values[k]
            a0, a1 = args[k - 1], args[k]
            if v1 == v0:
                return float(a0)
            return float(a0 + (r - v0) / (v1 - v0) * (a1 - a0))
        # log_power: monotone bisection over a wide bracket
        if not self.unbounded and self.sup_value is not None \
                and r > self.sup_value:
            return np.inf
        lo, hi = 1e-300, 1.0
        while self._fn(hi) < r and hi < 1e300:
            hi *= 4.0
        if self._fn(hi) < r:
            return np.inf
        for _ in range(200):
            mid = np.sqrt(lo * hi)
            if self._fn(mid) >= r:
                hi = mid
            else:
                lo = mid
        return float(hi)


# ----------------------------------------------------------------------
# profile curves and subset results


@dataclass(frozen=True)
class JpResult:
    """J_p of one subset: value, mode (exact | lower_bound), optimizer.

    ``value`` may be numpy.inf; then ``reason`` says why ("whole_space" or
    "isolated_at_scale") and the witness is the offending field.
    """

    value: float
    mode: str
    witness_field: Optional[np.ndarray] = None
    witness_subset: Optional[np.ndarray] = None
    reason: Optional[str] = None


@dataclass
class ProfileCurve:
    """Sampled profile: values over a grid of masses/radii with witnesses.

    ``mode`` is "exact", "lower_bound" (search family may miss the optimum)
    or "upper_bound" (infimum restricted to a family). Witnesses carry
    whatever re-evaluates the sample (subset indices, field, center/radius).
    """

    kind: str
    args: np.ndarray
    values: np.ndarray
    mode: str
    witnesses: list = dataclass_field(default_factory=list)
    meta: dict = dataclass_field(default_factory=dict)


# ----------------------------------------------------------------------
# exhaustive enumeration (N <= 18)


def _subset_tables(space, backend):
    """Per-mask measure and denominator over all subsets of the space.

    Returns (mu_of_mask, denom_of_mask) arrays of length 2^N, where the
    denominator is mu(boundary at scale h) for the sup backend and the
    ||grad 1_B||_1 cut weight otherwise. Chunked matrix arithmetic, no
    Python loop over masks.
    """
    n = space.n
    if n > EXACT_ENUM_LIMIT:
        raise ValueError(f"exhaustive enumeration capped at "
                         f"{EXACT_ENUM_LIMIT} points, space has {n}")
    total = 1 << n
    bits = (np.arange(total)[:, None] >> np.arange(n)[None, :]) & 1
    masks = bits.astype(float)
    mu_masks = masks @ space.measure
    pw = backend.pair_weights(space)
    if pw is None:
        rel = np.zeros((n, n), dtype=bool)
        for x, ball in enumerate(backend.relation_rows(space)):
            rel[x, ball] = True
        hit_in = masks @ rel.T.astype(float) > 0      # x within h of B
        hit_out = (1.0 - masks) @ rel.T.astype(float) > 0
        denom = (hit_in & hit_out).astype(float) @ space.measure
    else:
        rows, cols, w = pw
        wsym = np.zeros((n, n))
        np.add.at(wsym, (rows, cols), w)
        wsym = wsym + wsym.T
        r = wsym.sum(axis=1)
        denom = masks @ r - np.einsum("ij,ij->i", masks @ wsym, masks)
    return mu_masks, denom


def _mask_indices(mask, n):
    return np.flatnonzero((mask >> np.arange(n)) & 1)


# ----------------------------------------------------------------------
# J_p of one subset


def jp_subset(space, backend, A, p, rng=None) -> JpResult:
    """J_p(A) with the exactness ladder described in the module docstring."""
    idx = A.indices if hasattr(A, "indices") else \
        np.asarray(A, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("subset must be nonempty")
    if idx.size == space.n:
        # the constant field has zero gradient under every backend, so
        # J_p(X) = inf for all p; without this the descent path would
        # report a finite lower bound instead of the sentinel
        return _inf_result("whole_space", np.ones(space.n))
    if p == 2:
        res = _jp2(space, backend, idx)
        if res is not None:
            return res
    if p == 1:
        return _jp1(space, backend, idx)
    if np.isinf(p):
        return _jp_inf(space, backend, idx)
    return _jp_descent(space, backend, idx, p, rng)


def _inf_result(reason, field_or_subset, as_field=True):
    warnings.warn(f"J is infinite: {reason}", stacklevel=3)
    if as_field:
        return JpResult(np.inf, "exact", witness_field=field_or_subset,
                        reason=reason)
    return JpResult(np.inf, "exact", witness_subset=field_or_subset,
                    reason=reason)


def _jp2(space, backend, idx):
    """Exact J_2 via the smallest generalized eigenvalue; None if the
    backend has no quadratic form (sup) or the viewpoint is asymmetric."""
    if backend.kind == "viewpoint":
        if not is_symmetric(backend.vp).symmetric:
            return None
        if idx.size == space.n:
            f = np.ones(space.n)
            return _inf_result("whole_space", f)
        res = dirichlet_eigenvalue(backend.vp, idx)
        if res.delta <= 1e-14:
            return _inf_result("isolated_at_scale", res.field)
        return JpResult(res.delta ** -0.5, "exact", witness_field=res.field)
    if backend.kind != "lp":
        return None
    Q = l2_gradient_form(space, backend.h).tocsr()
    QA = Q[idx][:, idx]
    mu = space.measure[idx]
    root = np.sqrt(mu)
    if idx.size > DENSE_EIG_LIMIT:
        raise ValueError("exact J_2 with the lp backend is limited to "
                         f"{DENSE_EIG_LIMIT} points; use candidates")
    C = QA.multiply(1.0 / np.outer(root, root))
    w, v = np.linalg.eigh(np.asarray(C.todense()))
    lam = float(w[0])
    g = v[:, 0]
    f = np.zeros(space.n)
    f[idx] = g / root
    if idx.size == space.n:
        return _inf_result("whole_space", np.ones(space.n))
    if lam <= 1e-14 * max(1.0, float(w[-1])):
        return _inf_result("isolated_at_scale", f)
    return JpResult(lam ** -0.5, "exact", witness_field=f)


def _jp1(space, backend, idx):
    """Indicator-form J_1: max over B in A of mu(B)/denom(B)."""
    if idx.size <= EXACT_ENUM_LIMIT:
        mu_b, den_b = _subset_ratio_tables(space, backend, idx)
        tol = 1e-12 * max(1.0, float(den_b.max(initial=0.0)))
        best, best_mask = -np.inf, None
        # position 0 is the empty set
        for m in range(1, mu_b.size):
            if den_b[m] <= tol:
                sub = idx[_mask_indices(m, idx.size)]
                reason = "whole_space" if sub.size == space.n else \
                    "isolated_at_scale"
                return _inf_result(reason, sub, as_field=False)
            q = mu_b[m] / den_b[m]
            if q > best:
                best, best_mask = q, m
        sub = idx[_mask_indices(best_mask, idx.size)]
        return JpResult(float(best), "exact", witness_subset=sub)
    # candidate search: balls inside A around every point of A
    best, best_sub = -np.inf, None
    radii = _radius_grid(space, idx)
    pw = backend.pair_weights(space)
    for x in idx:
        d = space.dist_row(int(x))
        for r in radii:
            b = np.flatnonzero(d <= r)
            sub = np.intersect1d(b, idx, assume_unique=False)
            if sub.size == 0:
                continue
            q, is_inf = _indicator_ratio(space, backend, sub, pw)
            if is_inf:
                reason = "whole_space" if sub.size == space.n else \
                    "isolated_at_scale"
                return _inf_result(reason, sub, as_field=False)
            if q > best:
                best, best_sub = q, sub
    return JpResult(float(best), "lower_bound", witness_subset=best_sub)


def _subset_ratio_tables(space, backend, idx):
    """mu and denominator per submask of idx (enumeration in the full space)."""
    k = idx.size
    total = 1 << k
    bits = (np.arange(total)[:, None] >> np.arange(k)[None, :]) & 1
    masks = bits.astype(float)                       # 2^k x k over A's points
    mu_b = masks @ space.measure[idx]
    pw = backend.pair_weights(space)
    if pw is None:
        rel_rows = backend.relation_rows(space)
        relA = np.zeros((space.n, k), dtype=bool)    # x ~ (j-th point of A)
        pos = {int(p): j for j, p in enumerate(idx)}
        for x in range(space.n):
            for y in rel_rows[x]:
                j = pos.get(int(y))
                if j is not None:
                    relA[x, j] = True
        deg = np.array([r.size for r in rel_rows], dtype=float)
        denom = np.empty(total)
        chunk = 1 << 14
        relAf = relA.astype(float)
        for s in range(0, total, chunk):
            m = masks[s:s + chunk]
            inb = relAf @ m.T > 0                    # x sees B
            outb = (deg[:, None] - relAf @ m.T) > 0  # x sees complement
            denom[s:s + chunk] = space.measure @ (inb & outb)
        return mu_b, denom
    rows, cols, w = pw
    wsym = csr_matrix((w, (rows, cols)), shape=(space.n, space.n))
    wsym = wsym + wsym.T
    wA = np.asarray(wsym[idx][:, idx].todense())
    rowsum_full = np.asarray(wsym[idx].sum(axis=1)).ravel()
    denom = masks @ rowsum_full - np.einsum("ij,ij->i", masks @ wA, masks)
    return mu_b, denom


def _indicator_ratio(space, backend, sub, pw):
    """(mu(B)/denom(B), denom_is_zero) for a single subset; ``pw`` is the
    cached backend.pair_weights(space) (None for the sup backend)."""
    mu_b = float(space.measure[sub].sum())
    if pw is None:
        den = boundary_at_scale(space, sub, backend.scale).measure
    else:
        ind = np.zeros(space.n)
        ind[sub] = 1.0
        rows, cols, w = pw
        den = float(np.sum(w * np.abs(ind[rows] - ind[cols])))
    if den <= 1e-12 * max(1.0, mu_b):
        return np.inf, True
    return mu_b / den, False


def _jp_inf(space, backend, idx):
    """Exact J_inf: the chain in-radius of A under the support relation."""
    rel = backend.relation_rows(space)
    if backend.kind == "viewpoint" and not is_symmetric(backend.vp).symmetric:
        raise ValueError("exact J_inf needs a symmetric support relation; "
                         "the viewpoint is not symmetric")
    in_a = np.zeros(space.n, dtype=bool)
    in_a[idx] = True
    k = np.full(space.n, -1, dtype=np.int64)
    k[~in_a] = 0
    frontier = np.flatnonzero(~in_a)
    if frontier.size == 0:
        return _inf_result("whole_space", np.ones(space.n))
    step = 0
    while frontier.size:
        step += 1
        nxt = []
        for x in frontier:
            for y in rel[x]:
                if k[y] < 0:
                    k[y] = step
                    nxt.append(y)
        frontier = np.array(nxt, dtype=np.int64)
    if np.any(k[idx] < 0):
        lost = idx[k[idx] < 0]
        f = np.zeros(space.n)
        f[lost] = 1.0
        return _inf_result("isolated_at_scale", f)
    value = float(k[idx].max())
    f = np.where(in_a, k.astype(float), 0.0)
    return JpResult(value, "exact", witness_field=f)


def _jp_descent(space, backend, idx, p, rng):
    """Projected subgradient descent on the p-Rayleigh quotient (8 restarts,
    500 iterations); the reported J is a certified lower bound."""
    rng = np.random.default_rng(0 if rng is None else rng)
    mu = space.measure
    pw = backend.pair_weights(space)
    if pw is not None:
        rows, cols, w = pw
        keep = rows != cols

        def energy_grad(f):
            diff = f[rows] - f[cols]
            mag = np.abs(diff)
            e = float(np.sum(w * mag ** p))
            term = np.where(mag > 0, p * w * mag ** (p - 2) * diff, 0.0)
            g = np.zeros(space.n)
            np.add.at(g, rows[keep], term[keep])
            np.add.at(g, cols[keep], -term[keep])
            return e, g
    else:
        rel = backend.relation_rows(space)

        def energy_grad(f):
            e = 0.0
            g = np.zeros(space.n)
            for x in range(space.n):
                d = np.abs(f[rel[x]] - f[x])
                j = int(np.argmax(d))
                m = d[j]
                e += mu[x] * m ** p
                if m > 0:
                    y = rel[x][j]
                    s = mu[x] * p * m ** (p - 1) * np.sign(f[x] - f[y])
                    g[x] += s
                    g[y] -= s
            return float(e), g

    outside = np.setdiff1d(np.arange(space.n), idx, assume_unique=False)
    best_q, best_f = np.inf, None
    for _ in range(DESCENT_RESTARTS):
        f = np.zeros(space.n)
        f[idx] = rng.normal(size=idx.size)
        f[idx] -= np.average(f[idx], weights=mu[idx])
        norm = lp_norm(space, f, p)
        if norm == 0:
            continue
        f /= norm
        stall, last = 0, np.inf
        for it in range(DESCENT_ITERS):
            e, ge = energy_grad(f)
            if e <= 1e-18:
                return _inf_result("isolated_at_scale", f.copy())
            gn = p * mu * np.abs(f) ** (p - 1) * np.sign(f)
            d = ge - e * gn      # subgradient of e/norm^p at norm = 1
            d[outside] = 0.0
            nd = np.linalg.norm(d)
            if nd == 0:
                break
            f = f - (0.2 / (1.0 + 0.02 * it)) * d / nd
            f[outside] = 0.0
            norm = lp_norm(space, f, p)
            if norm == 0:
                break
            f /= norm
            q = energy_grad(f)[0]
            if q < best_q:
                best_q, best_f = q, f.copy()
            if abs(last - q) < DESCENT_TOL * max(1.0, q):
                stall += 1
                if stall > 20:
                    break
            else:
                stall = 0
            last = q
    if best_f is None:
        raise ValueError("descent failed to produce a nonzero field")
    # best_q approximates inf of ||grad f||_p^p at ||f||_p = 1
    value = best_q ** (-1.0 / p)
    return JpResult(float(value), "lower_bound", witness_field=best_f)


def _radius_grid(space, idx, cap=12):
    x0 = int(idx[0])
    d = space.dist_row(x0)
    vals = np.unique(d[np.isfinite(d)])
    vals = vals[vals > 0]
    if vals.size > cap:
        vals = vals[np.linspace(0, vals.size - 1, cap).astype(int)]
    return vals


# ----------------------------------------------------------------------
# candidate families


def candidate_subsets(space, backend=None, max_candidates=1200):
    """Documented search family: metric balls everywhere; coordinate
    sub-boxes and their complements on grids (intervals and their
    complements on paths); sublevel sets of the second eigenfield for a
    symmetric viewpoint backend.

    Complements matter: on a grid the complement of a small box can beat
    every box for boundary-to-volume ratios, and leaving them out makes the
    family provably miss exhaustive optima.
    """
    seen = set()
    out = []

    def push(indices, label):
        indices = np.asarray(indices, dtype=np.int64)
        if indices.size == 0 or indices.size >= space.n:
            return
        key = indices.tobytes()
        if key in seen:
            return
        seen.add(key)
        out.append((space.subset(indices), label))

    # metric balls, strided centers
    stride = max(1, space.n // 80)
    centers = range(0, space.n, stride)
    for x in centers:
        d = space.dist_row(x)
        for r in _radius_grid(space, np.array([x]), cap=10):
            push(np.flatnonzero(d <= r), f"ball({x},{r:g})")

    shape = space.meta.get("shape")
    if shape is not None:
        dims = len(shape)
        axes = [np.arange(s) for s in shape]
        coords = np.stack(np.meshgrid(*axes, indexing="ij"),
                          axis=-1).reshape(space.n, dims)
        sizes = [_strided_range(1, s) for s in shape]
        corners = [_strided_range(0, s - 1) for s in shape]
        count = 0
        for corner in _product_grid(corners):
            if count > max_candidates:
                break
            for size in _product_grid(sizes):
                if count > max_candidates:
                    break
                lo = np.array(corner)
                hi = lo + np.array(size)
                if np.any(hi > np.array(shape)):
                    continue
                inside = np.all((coords >= lo) & (coords < hi), axis=1)
                idx = np.flatnonzero(inside)
                push(idx, f"box({corner},{size})")
                push(np.flatnonzero(~inside), f"cobox({corner},{size})")
                count += 2

    if backend is not None and backend.kind == "viewpoint" and \
            is_symmetric(backend.vp).symmetric and space.n >= 3:
        M = np.asarray(backend.vp.symmetric_matrix().todense())
        w, v = np.linalg.eigh(M)
        g = v[:, -2] / np.sqrt(space.measure)   # second eigenfield on L2(mu)
        levels = np.unique(g)
        if levels.size > 32:
            levels = levels[np.linspace(0, levels.size - 1, 32).astype(int)]
        for t in levels:
            push(np.flatnonzero(g <= t), f"sublevel({t:.3g})")
            push(np.flatnonzero(g > t), f"suplevel({t:.3g})")

    return out[:max_candidates]


def _strided_range(lo, hi, cap=12):
    """Integers lo..hi inclusive, thinned to about cap values."""
    vals = list(range(lo, hi + 1))
    if len(vals) > cap:
        pick = np.unique(np.linspace(0, len(vals) - 1, cap).astype(int))
        vals = [vals[i] for i in pick]
    return vals


def _product_grid(lists):
    if len(lists) == 1:
        for a in lists[0]:
            yield (a,)
        return
    for a in lists[0]:
        for rest in _product_grid(lists[1:]):
            yield (a,) + rest


# ----------------------------------------------------------------------
# profiles


def isoperimetric_profile(space, backend, p, volume_grid,
                          strategy="candidates", rng=None,
                          max_candidates=1200) -> ProfileCurve:
    """j(v) = sup over subsets of measure <= v of J_p, sampled on a grid.

    ``exact`` enumerates every proper nonempty subset (N <= 18 only);
    ``candidates`` scans the documented family and flags the curve as a
    lower bound. Subsets whose J is the infinity sentinel are skipped: the
    profile describes proper subsets, and the sentinel signals a scale
    below connectivity rather than a profile value.
    """
    volume_grid = np.asarray(volume_grid, dtype=float)
    if strategy == "exact":
        entries = _exact_profile_entries(space, backend, p)
        mode = "exact"
    else:
        entries = []
        pw = backend.pair_weights(space) if p == 1 else None
        for sub, label in candidate_subsets(space, backend, max_candidates):
            if p == 1:
                # the profile is itself a subset supremum, so each candidate
                # contributes its indicator ratio directly (no inner max)
                q, is_inf = _indicator_ratio(space, backend, sub.indices, pw)
                val = np.inf if is_inf else q
            else:
                res = jp_subset(space, backend, sub.indices, p, rng=rng)
                if np.isinf(res.value) and res.reason == "whole_space":
                    continue
                val = res.value
            entries.append((sub.measure, val, sub.indices, label))
        mode = "lower_bound"
    values = np.full(volume_grid.size, np.nan)
    witnesses = [None] * volume_grid.size
    for i, v in enumerate(volume_grid):
        best = -np.inf
        for mu_b, val, sub, label in entries:
            if mu_b <= v and val > best:
                best = val
                witnesses[i] = {"indices": sub, "label": label,
                                "measure": mu_b, "value": val}
        values[i] = best if best > -np.inf else np.nan
    return ProfileCurve("j_p", volume_grid, values, mode, witnesses,
                        {"p": p, "backend": backend.describe(),
                         "strategy": strategy})


def _exact_profile_entries(space, backend, p):
    if space.n > EXACT_ENUM_LIMIT:
        raise ValueError(f"exact strategy capped at {EXACT_ENUM_LIMIT} "
                         f"points, space has {space.n}")
    entries = []
    if p == 1:
        mu_b, den_b = _subset_tables(space, backend)
        tol = 1e-12 * max(1.0, float(den_b.max(initial=0.0)))
        for m in range(1, (1 << space.n) - 1):
            idx = _mask_indices(m, space.n)
            val = np.inf if den_b[m] <= tol else mu_b[m] / den_b[m]
            entries.append((mu_b[m], val, idx, "exhaustive"))
        return entries
    for m in range(1, (1 << space.n) - 1):
        idx = _mask_indices(m, space.n)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = jp_subset(space, backend, idx, p)
        entries.append((float(space.measure[idx].sum()), res.value, idx,
                        "exhaustive"))
    return entries


def profile_in_balls(space, backend, p, radius_grid, centers=None,
                     rng=None) -> ProfileCurve:
    """J restricted to balls: t -> max over centers of J_p(B(x, t)).

    ``centers=None`` scans every point when N <= 400, else a stride-capped
    subset (recorded in meta). Unlike subset profiles, the infinity
    sentinel is kept: a ball that swallows the whole space genuinely has
    J = inf and the curve should say so.
    """
    if centers is None:
        stride = max(1, space.n // 400)
        centers = list(range(0, space.n, stride))
    centers = list(centers)
    radius_grid = np.asarray(radius_grid, dtype=float)
    values = np.zeros(radius_grid.size)
    witnesses = [None] * radius_grid.size
    modes = set()
    for i, t in enumerate(radius_grid):
        best, wit = -np.inf, None
        for x in centers:
            ball = space.ball(int(x), t)
            res = jp_subset(space, backend, ball, p, rng=rng)
            modes.add(res.mode)
            if res.value > best:
                best = res.value
                wit = {"center": int(x), "radius": float(t),
                       "indices": ball, "value": res.value,
                       "reason": res.reason}
            if np.isinf(best):
                break
        values[i] = best
        witnesses[i] = wit
    mode = "exact" if modes <= {"exact"} else "lower_bound"
    return ProfileCurve("J_balls", radius_grid, values, mode, witnesses,
                        {"p": p, "backend": backend.describe(),
                         "centers": len(centers)})


def boundary_profile(space, h, family="all", t_grid=None):
    """(I, I_down, I_up) boundary profiles at scale h.

    I(t) = inf{mu(boundary_h A) : mu(A) >= t} over *proper nonempty*
    subsets (the whole space has empty boundary and would collapse I to 0).
    Exact by enumeration when family="all" and N <= 18; for an explicit
    family, I is the same infimum restricted to the family and is labeled
    "upper_bound". I_down/I_up are the family-restricted lower/upper
    envelopes (inf of boundary above mass t / sup of boundary below mass t)
    and are exact statements about the family itself.

    An explicit family may contain the whole space (a caller asking about
    X gets its empty boundary back); only enumeration excludes it.
    """
    if t_grid is None:
        t_grid = np.unique(np.cumsum(np.sort(space.measure)))
    t_grid = np.asarray(t_grid, dtype=float)
    if family == "all":
        if space.n > EXACT_ENUM_LIMIT:
            raise ValueError("family='all' needs N <= 18; pass a family")
        subs = None
        mu_b, den_b = _subset_tables(space, Backend.sup(h))
        masses = mu_b[1:-1]
        bounds = den_b[1:-1]
        mask_ids = np.arange(1, (1 << space.n) - 1)
        mode_i = "exact"
    else:
        if family == "balls":
            fam = []
            for x in range(space.n):
                for r in _radius_grid(space, np.array([x]), cap=10):
                    fam.append(space.subset(space.ball(x, r)))
        else:
            fam = [a if hasattr(a, "indices") else space.subset(a)
                   for a in family]
        fam = [a for a in fam if 0 < len(a)]
        if not fam:
            raise ValueError("boundary_profile needs a nonempty family of "
                             "nonempty subsets")
        subs = fam
        masses = np.array([a.measure for a in fam])
        bounds = np.array([boundary_at_scale(space, a, h).measure
                           for a in fam])
        mask_ids = None
        mode_i = "upper_bound"

    def witness(j):
        if subs is not None:
            return {"indices": subs[j].indices, "measure": masses[j],
                    "boundary": bounds[j]}
        idx = _mask_indices(mask_ids[j], space.n)
        return {"indices": idx, "measure": masses[j], "boundary": bounds[j]}

    I_vals = np.full(t_grid.size, np.nan)
    low_vals = np.full(t_grid.size, np.nan)
    up_vals = np.full(t_grid.size, np.nan)
    I_wit = [None] * t_grid.size
    low_wit = [None] * t_grid.size
    up_wit = [None] * t_grid.size
    for i, t in enumerate(t_grid):
        ge = np.flatnonzero(masses >= t)
        le = np.flatnonzero(masses <= t)
        if ge.size:
            j = ge[np.argmin(bounds[ge])]
            I_vals[i] = bounds[j]
            I_wit[i] = witness(j)
            low_vals[i] = bounds[j]
            low_wit[i] = I_wit[i]
        if le.size:
            j = le[np.argmax(bounds[le])]
            up_vals[i] = bounds[j]
            up_wit[i] = witness(j)
    fam_name = family if isinstance(family, str) else "provided"
    meta = {"h": h, "family": fam_name}
    return (ProfileCurve("I", t_grid, I_vals, mode_i, I_wit, meta),
            ProfileCurve("I_down", t_grid, low_vals, "exact", low_wit, meta),
            ProfileCurve("I_up", t_grid, up_vals, "exact", up_wit, meta))


# ----------------------------------------------------------------------
# inequality verification


@dataclass(frozen=True)
class SobolevReport:
    passes: bool
    C: float
    C_prime: float
    margins: np.ndarray
    worst_index: int
    failures: list


def sobolev_verify(space, backend, p, phi, fields) -> SobolevReport:
    """Fit the smallest C with ||f||_p <= C phi(C' mu(supp f)) ||grad f||_p
    across the samples, over C' in {1, 2, 4, 8}.

    Falsification-style: a pass is relative to the sample set. A sample
    with zero gradient norm and nonzero p-norm defeats every (C, C') and
    is reported as a hard failure.
    """
    fields = [np.asarray(f, dtype=float) for f in fields]
    if not fields:
        raise ValueError("need at least one sample field")
    lhs, grads, supports = [], [], []
    failures = []
    for i, f in enumerate(fields):
        nf = lp_norm(space, f, p)
        ng = lp_norm(space, backend.gradient(space, f, p), p)
        omega = float(space.measure[np.flatnonzero(f != 0)].sum())
        if ng == 0 and nf > 0:
            failures.append({"index": i, "reason": "zero gradient norm with "
                                                   "nonzero field"})
        lhs.append(nf)
        grads.append(ng)
        supports.append(omega)
    if failures:
        return SobolevReport(False, np.inf, np.nan,
                             np.full(len(fields), np.nan),
                             failures[0]["index"], failures)
    lhs = np.array(lhs)
    grads = np.array(grads)
    supports = np.array(supports)
    best = (np.inf, np.nan)
    for cp in (1.0, 2.0, 4.0, 8.0):
        denom = np.array([phi(cp * s) for s in supports]) * grads
        ok = denom > 0
        if not np.all(ok | (lhs == 0)):
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            need = np.where(lhs > 0, lhs / np.where(ok, denom, np.nan), 0.0)
        cmax = float(np.nanmax(need))
        if cmax < best[0]:
            best = (cmax, cp)
    C, cp = best
    if not np.isfinite(C):
        return SobolevReport(False, np.inf, np.nan,
                             np.full(len(fields), np.nan), 0, failures)
    denom = C * np.array([phi(cp * s) for s in supports]) * grads
    margins = denom - lhs
    return SobolevReport(True, C, cp, margins, int(np.argmin(margins)),
                         failures)


@dataclass(frozen=True)
class NashReport:
    passes: bool
    C: float
    margins: np.ndarray


def nash_check(space, vp, phi, fields) -> NashReport:
    """Best C on a doubling grid with
    ||f||_2^2 <= C phi^2(C ||f||_1^2 / ||f||_2^2) ||grad_{P^2,2} f||_2^2.

    The rate argument ||f||_1^2 / ||f||_2^2 is volume-like (it equals
    mu(A) for an indicator of A), which matches phi's role as a function
    of mass; the two-step gradient norm is evaluated through the energy
    identity (2 (||f||_2^2 - ||Pf||_2^2)).
    """
    from coarsecalc.calculus import p2_energy_identity

    fields = [np.asarray(f, dtype=float) for f in fields]
    norms = []
    for i, f in enumerate(fields):
        n1 = lp_norm(space, f, 1)
        if n1 == 0:
            raise ValueError(f"field {i} is zero")
        n2sq = lp_norm(space, f, 2) ** 2
        gradsq = p2_energy_identity(vp, f)[0]
        norms.append((n1, n2sq, gradsq))
    grid = [2.0 ** k for k in range(-4, 13)]
    margins = []
    for C in grid:
        margins = []
        ok = True
        for n1, n2sq, gradsq in norms:
            arg = C * n1 ** 2 / n2sq
            rhs = C * phi(arg) ** 2 * gradsq
            margins.append(rhs - n2sq)
            if rhs < n2sq:
                ok = False
        if ok:
            return NashReport(True, C, np.array(margins))
    return NashReport(False, np.inf, np.array(margins))


def cheeger(space, h, family):
    """min over the family (restricted to mu(A) <= mu(X)/2) of
    mu(boundary_h A)/mu(A), with the witness subset.

    family="all" enumerates every subset (N <= 18); otherwise pass an
    iterable of subsets/index arrays.
    """
    half = space.total_measure / 2.0
    if isinstance(family, str) and family == "all":
        if space.n > EXACT_ENUM_LIMIT:
            raise ValueError("family='all' needs N <= 18")
        mu_b, den_b = _subset_tables(space, Backend.sup(h))
        best, best_m = np.inf, None
        for m in range(1, 1 << space.n):
            if mu_b[m] > half or mu_b[m] == 0:
                continue
            q = den_b[m] / mu_b[m]
            if q < best:
                best, best_m = q, m
        if best_m is None:
            raise ValueError("no subset satisfies mu(A) <= mu(X)/2")
        return float(best), space.subset(_mask_indices(best_m, space.n))
    fam = [a if hasattr(a, "indices") else space.subset(a) for a in family]
    fam = [a for a in fam if 0 < a.measure <= half]
    if not fam:
        raise ValueError("cheeger needs a nonempty family with "
                         "mu(A) <= mu(X)/2")
    best, wit = np.inf, None
    for a in fam:
        q = boundary_at_scale(space, a, h).measure / a.measure
        if q < best:
            best, wit = q, a
    return float(best), wit


@dataclass(frozen=True)
class VolumeCheckReport:
    status: str          # "pass" | "fail" | "phi_bounded"
    worst_point: int
    worst_radius: float
    worst_margin: float
    failures: list


def sinf_volume_check(space, phi, radius_grid) -> VolumeCheckReport:
    """Check the volume lower bound V(x, r) >= phi^{-1}(r) on a radius grid.

    A bounded phi cannot support the sup-norm inequality at large radii;
    that case returns a structured "phi_bounded" report instead of a
    numeric failure.
    """
    radius_grid = sorted(float(r) for r in radius_grid)
    needed = [phi.inverse(r) for r in radius_grid]
    if any(np.isinf(v) for v in needed):
        r_bad = radius_grid[int(np.argmax(np.isinf(needed)))]
        return VolumeCheckReport("phi_bounded", -1, r_bad, -np.inf, [])
    failures = []
    worst = (np.inf, -1, np.nan)
    for x in range(space.n):
        d = space.dist_row(x)
        for r, need in zip(radius_grid, needed):
            v = float(space.measure[d <= r].sum())
            margin = v - need
            if margin < worst[0]:
                worst = (margin, x, r)
            if margin < 0:
                failures.append({"x": x, "r": r, "volume": v,
                                 "required": need})
    status = "pass" if not failures else "fail"
    return VolumeCheckReport(status, worst[1], worst[2], worst[0], failures)
