"""Averaging kernels at a scale, their certificates, and the Markov operator.

A *viewpoint* at scale h assigns to each point x a probability density
``p_x`` with respect to the space measure (the probability of landing at y
is ``p_x(y) * mu(y)``), subject to three axioms:

1. each row integrates to 1 against mu (relative tolerance 1e-12);
2. ``supp(p_x)`` lies inside the ball ``B(x, A*h)`` for a certified A >= 1;
3. ``p_x(y) >= c`` for every y in ``B(x, h)``, for a certified floor c > 0.

Densities are stored as a sparse CSR matrix, which makes symmetry
``p_x(y) == p_y(x)`` a literal matrix symmetry and keeps the Markov
operator a single sparse matvec: ``(Pf)(x) = sum_y p_x(y) f(y) mu(y)``.

Scalar fields are plain float arrays indexed by point.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.sparse import csr_matrix, diags

from coarsecalc.space import doubling_profile

STOCHASTIC_TOL = 1e-12
SYMMETRY_TOL = 1e-12

# warn (never error) when composing over a space whose doubling constant at
# the composed half-scale exceeds this
DOUBLING_WARN_CAP = 64.0


@dataclass(frozen=True)
class Certificate:
    """Validated viewpoint constants: support factor A >= 1, density floor c > 0."""

    A: float
    c: float


@dataclass(frozen=True)
class Violation:
    """Witness that a kernel fails a viewpoint axiom at scale h."""

    x: int
    axiom: str
    y: int

    def __str__(self):
        return f"row {self.x} fails {self.axiom!r} at point {self.y}"


@dataclass(frozen=True)
class SymmetryReport:
    symmetric: bool
    x: int
    y: int
    gap: float
    p_xy: float
    p_yx: float


class Viewpoint:
    """A certified kernel at scale h on a fixed space.

    Immutable after construction; ``apply`` and ``compose`` are pure, so
    viewpoints can be shared freely across workers.
    """

    def __init__(self, space, h, dens, certificate, kind="custom"):
        dens = csr_matrix(dens)
        dens.eliminate_zeros()
        if dens.shape != (space.n, space.n):
            raise ValueError(f"kernel must be {space.n} x {space.n}, "
                             f"got {dens.shape}")
        if h <= 0:
            raise ValueError(f"scale must be > 0, got {h}")
        self.space = space
        self.h = float(h)
        self.dens = dens
        self.certificate = certificate
        self.kind = kind

    @property
    def A(self):
        return self.certificate.A

    @property
    def c(self):
        return self.certificate.c

    def row(self, x):
        """Support indices and densities of row x."""
        sl = slice(self.dens.indptr[x], self.dens.indptr[x + 1])
        return self.dens.indices[sl], self.dens.data[sl]

    def transition_matrix(self):
        """Row-stochastic transition probabilities K[x, y] = p_x(y) mu(y)."""
        return self.dens @ diags(self.space.measure)

    def symmetric_matrix(self):
        """M[x, y] = p_x(y) sqrt(mu(x) mu(y)).

        For a symmetric viewpoint this is a symmetric matrix similar to the
        transition matrix, so its eigenvalues are the operator spectrum on
        L2(mu).
        """
        root = np.sqrt(self.space.measure)
        return diags(root) @ self.dens @ diags(root)

    def __repr__(self):
        return (f"Viewpoint(h={self.h:g}, kind={self.kind!r}, A={self.A:g}, "
                f"c={self.c:g}, space={self.space.name!r})")


def standard_viewpoint(space, h) -> Viewpoint:
    """Uniform averaging over the closed ball: p_x = 1_B(x,h) / V(x,h).

    Certificate: A = 1 and c = 1 / max_x V(x, h).
    """
    if h <= 0:
        raise ValueError(f"scale must be > 0, got {h}")
    indptr = np.zeros(space.n + 1, dtype=np.int64)
    indices = []
    data = []
    vmax = 0.0
    for x, ball in enumerate(space.ball_rows(h)):
        v = space.measure[ball].sum()
        vmax = max(vmax, v)
        indices.append(ball)
        data.append(np.full(ball.size, 1.0 / v))
        indptr[x + 1] = indptr[x] + ball.size
    dens = csr_matrix((np.concatenate(data), np.concatenate(indices), indptr),
                      shape=(space.n, space.n))
    return Viewpoint(space, h, dens, Certificate(1.0, 1.0 / vmax),
                     kind="standard")


def validate(space, dens, h) -> Union[Certificate, Violation]:
    """Check the viewpoint axioms; return tight constants or a witness.

    Returns the smallest support factor A (clamped to >= 1) and the largest
    density floor c for which the axioms hold. A row that is not a
    probability density raises (reporting the row sum); a zero density
    inside some B(x, h) returns a :class:`Violation` witness instead.
    """
    dens = csr_matrix(dens)
    dens.eliminate_zeros()
    if np.any(dens.data < 0):
        bad = int(np.argmax(dens.data < 0))
        raise ValueError(f"kernel has a negative density {dens.data[bad]}")
    sums = dens @ space.measure
    worst = int(np.argmax(np.abs(sums - 1.0)))
    if abs(sums[worst] - 1.0) > STOCHASTIC_TOL:
        raise ValueError(f"row {worst} is not a probability density: "
                         f"integrates to {sums[worst]!r}")
    A = 1.0
    c = np.inf
    for x in range(space.n):
        sup, vals = dens.indices[dens.indptr[x]:dens.indptr[x + 1]], \
            dens.data[dens.indptr[x]:dens.indptr[x + 1]]
        d = space.dist_row(x)
        if sup.size:
            A = max(A, d[sup].max() / h)
        ball = np.flatnonzero(d <= h)
        in_sup = np.isin(ball, sup, assume_unique=True)
        if not np.all(in_sup):
            y = int(ball[~in_sup][0])
            return Violation(x, "density floor", y)
        lookup = np.isin(sup, ball, assume_unique=True)
        c = min(c, vals[lookup].min())
    return Certificate(float(A), float(c))


def is_symmetric(vp) -> SymmetryReport:
    """True iff max_{x,y} |p_x(y) - p_y(x)| <= 1e-12, with the worst pair."""
    diff = (vp.dens - vp.dens.T).tocoo()
    if diff.nnz == 0:
        p = vp.dens[0, 0]
        return SymmetryReport(True, 0, 0, 0.0, p, p)
    k = int(np.argmax(np.abs(diff.data)))
    x, y = int(diff.row[k]), int(diff.col[k])
    gap = abs(diff.data[k])
    return SymmetryReport(gap <= SYMMETRY_TOL, x, y, float(gap),
                          float(vp.dens[x, y]), float(vp.dens[y, x]))


def symmetrize(space, vp):
    """Re-express the standard viewpoint as a symmetric one over V-weighted mu.

    The standard kernel is reversible for the measure mu'(y) = V(y,h) mu(y);
    dividing each density by the landing-ball volume, q_x(y) = p_x(y)/V(y,h),
    gives the same transition probabilities as densities w.r.t. mu', and the
    density matrix becomes literally symmetric. Returns (viewpoint over the
    reweighted space, the reweighted space).
    """
    if vp.kind != "standard":
        _assert_standard(space, vp)
    # standard rows are 1/V(x,h) on the diagonal
    V = 1.0 / vp.dens.diagonal()
    new_measure = V * space.measure
    new_space = space.with_measure(new_measure, name=f"{space.name}|Vweighted")
    q = vp.dens @ diags(1.0 / V)
    c = float(q.data.min())
    out = Viewpoint(new_space, vp.h, q, Certificate(1.0, c),
                    kind="symmetrized")
    return out, new_space


def _assert_standard(space, vp):
    for x in range(space.n):
        sup, vals = vp.row(x)
        ball = space.ball(x, vp.h)
        if sup.size != ball.size or np.any(sup != ball):
            raise ValueError(f"symmetrize expects the standard viewpoint; "
                             f"row {x} support differs from B(x, h)")
        v = space.measure[ball].sum()
        if np.max(np.abs(vals - 1.0 / v)) > 1e-12 / v:
            raise ValueError(f"symmetrize expects the standard viewpoint; "
                             f"row {x} is not uniform on its ball")


def compose(P, Q) -> Viewpoint:
    """Kernel of the two-step transition P-then-Q, certified at the largest
    workable scale.

    The product operator's density is R = D_P diag(mu) D_Q. Row sums and the
    support bound survive automatically at any scale, so only the density
    floor can fail; the scale is searched over the geometric grid
    (h_P + h_Q) * 2^(-k/4), k = 1..16, and the largest passing value wins.
    Raises if every candidate fails, carrying the closest witness.
    """
    if P.space is not Q.space:
        raise ValueError("compose requires viewpoints on the same space "
                         f"(got {P.space.name!r} and {Q.space.name!r})")
    space = P.space
    R = P.dens @ diags(space.measure) @ Q.dens
    R.eliminate_zeros()
    R = csr_matrix(R)

    # z_x = distance from x to the nearest zero-density point; the floor
    # axiom holds at h'' iff h'' < min_x z_x
    zmin = np.inf
    zwitness = (0, 0)
    maxd = 0.0
    pair_d = []
    pair_v = []
    for x in range(space.n):
        sup = R.indices[R.indptr[x]:R.indptr[x + 1]]
        vals = R.data[R.indptr[x]:R.indptr[x + 1]]
        d = space.dist_row(x)
        if sup.size:
            maxd = max(maxd, float(d[sup].max()))
        mask = np.ones(space.n, dtype=bool)
        mask[sup] = False
        if np.any(mask):
            zx = d[mask].min()
            if zx < zmin:
                zmin = zx
                zwitness = (x, int(np.flatnonzero(mask & (d == zx))[0]))
        pair_d.append(d[sup])
        pair_v.append(vals)
    pair_d = np.concatenate(pair_d) if pair_d else np.array([])
    pair_v = np.concatenate(pair_v) if pair_v else np.array([])

    top = P.h + Q.h
    for k in range(1, 17):
        h2 = top * 2.0 ** (-k / 4.0)
        if h2 < zmin:
            keep = pair_d <= h2
            c2 = float(pair_v[keep].min())
            A2 = max(1.0, maxd / h2)
            rep = doubling_profile(space, [h2 / 2.0])[0]
            if rep.constant > DOUBLING_WARN_CAP:
                warnings.warn(
                    f"composing over a space with doubling constant "
                    f"{rep.constant:g} at r={h2 / 2:g} (cap "
                    f"{DOUBLING_WARN_CAP:g}); the certified floor may be "
                    f"very weak", stacklevel=2)
            return Viewpoint(space, h2, R, Certificate(A2, c2),
                             kind="composed")
    raise ValueError(
        f"composition admits no certificate on the 16-scale grid below "
        f"{top:g}: {Violation(zwitness[0], 'density floor', zwitness[1])}")


def apply(vp, f):
    """Markov smoothing: (Pf)(x) = sum_y p_x(y) f(y) mu(y)."""
    f = np.asarray(f, dtype=float)
    if f.shape != (vp.space.n,):
        raise ValueError(f"field must have shape ({vp.space.n},), "
                         f"got {f.shape}")
    return vp.dens @ (f * vp.space.measure)


def random_symmetric_viewpoint(space, h, rng) -> Viewpoint:
    """Random symmetric viewpoint for property tests.

    Draws symmetric uniform(0.5, 1.5) weights on the pairs {d(x,y) <= h},
    divides by the largest row integral, and pours each row's deficit onto
    the diagonal. Rows sum to 1 exactly (up to float), the floor is at
    least min-weight / max-row-integral, and the support factor is A = 1.
    """
    n = space.n
    rows, cols = [], []
    for x, ball in enumerate(space.ball_rows(h)):
        rows.extend([x] * ball.size)
        cols.extend(ball.tolist())
    rows = np.array(rows)
    cols = np.array(cols)
    w = np.zeros((n, n))
    w[rows, cols] = 1.0
    w *= rng.uniform(0.5, 1.5, size=(n, n))
    w = np.minimum(w, w.T)  # symmetric, zero outside symmetric ball pairs
    integrals = w @ space.measure
    w /= integrals.max()
    deficit = 1.0 - w @ space.measure
    w[np.arange(n), np.arange(n)] += deficit / space.measure
    dens = csr_matrix(w)
    cert = validate(space, dens, h)
    if not isinstance(cert, Certificate):
        raise AssertionError(f"random kernel failed validation: {cert}")
    return Viewpoint(space, h, dens, cert, kind="random_symmetric")


# ----------------------------------------------------------------------
# JSON serialization: {"h": float, "rows": [{"x": i, "support": [...],
#                      "density": [...]}]}


def viewpoint_to_json(vp) -> dict:
    rows = []
    for x in range(vp.space.n):
        sup, vals = vp.row(x)
        rows.append({"x": x, "support": [int(j) for j in sup],
                     "density": [float(v) for v in vals]})
    return {"h": vp.h, "rows": rows}


def save_viewpoint(vp, path):
    with open(path, "w") as fh:
        json.dump(viewpoint_to_json(vp), fh, sort_keys=True)


def viewpoint_from_json(doc, space) -> Viewpoint:
    """Rebuild a viewpoint from its JSON document against a given space.

    The certificate is recomputed by :func:`validate`, never trusted from
    the file; a kernel that no longer satisfies the axioms is rejected with
    the witness.
    """
    for key in ("h", "rows"):
        if key not in doc:
            raise ValueError(f"kernel file missing key {key!r}")
    rows = doc["rows"]
    if len(rows) != space.n:
        raise ValueError(f"kernel has {len(rows)} rows, space has {space.n}")
    indptr = np.zeros(space.n + 1, dtype=np.int64)
    indices = []
    data = []
    seen = set()
    for row in rows:
        x = int(row["x"])
        if not 0 <= x < space.n or x in seen:
            raise ValueError(f"bad or duplicate row index {x}")
        seen.add(x)
    by_x = {int(r["x"]): r for r in rows}
    for x in range(space.n):
        row = by_x[x]
        sup = np.asarray(row["support"], dtype=np.int64)
        vals = np.asarray(row["density"], dtype=float)
        if sup.shape != vals.shape:
            raise ValueError(f"row {x}: support and density lengths differ")
        order = np.argsort(sup)
        indices.append(sup[order])
        data.append(vals[order])
        indptr[x + 1] = indptr[x] + sup.size
    dens = csr_matrix((np.concatenate(data) if data else np.array([]),
                       np.concatenate(indices) if indices else np.array([]),
                       indptr), shape=(space.n, space.n))
    cert = validate(space, dens, float(doc["h"]))
    if isinstance(cert, Violation):
        raise ValueError(f"kernel file fails validation: {cert}")
    return Viewpoint(space, float(doc["h"]), dens, cert, kind="loaded")


def load_viewpoint(path, space) -> Viewpoint:
    with open(path) as fh:
        doc = json.load(fh)
    return viewpoint_from_json(doc, space)
