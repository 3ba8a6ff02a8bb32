"""Finite metric measure spaces and the set calculus at a scale.

A space is a finite point set ``{0, ..., N-1}`` with a metric ``d`` and a
strictly positive weight per point. All geometry queries (balls, volumes,
thickenings, boundaries, doubling diagnostics, chain metrics) go through
:class:`MetricMeasureSpace`.

The metric is held by one of three interchangeable providers:

* ``dense``  -- an explicit N x N array (validated on construction);
* ``graph``  -- a weighted undirected graph, distances are shortest paths
  computed on demand (always a metric, so no triangle check is needed);
* ``coords`` -- points in R^k with an l1 / l2 / linf norm, distances
  computed row-by-row on demand (never materializes N^2 floats).

Conventions
-----------
* Balls are closed: ``B(x, r) = {y : d(x, y) <= r}``; ties at exactly ``r``
  are inside.
* ``thicken(A, h) = [A]_h = {x : d(x, A) <= h}``.
* ``boundary(A, h) = [A]_h & [A^c]_h`` with the complement taken inside the
  space; the definition is symmetric in ``A`` and ``A^c``.
* Disconnection (in ``chain_metric``) is reported by an ``inf`` sentinel plus
  a ``disconnected`` flag, never by a silently large float.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

# Triangle-inequality validation is O(N^3): on by default up to this size,
# opt-in above it.
TRIANGLE_CHECK_LIMIT = 300

# Hard cap for materializing dense N x N distance matrices.
DENSE_LIMIT = 6000


class MetricMeasureSpace:
    """A finite point set with a metric and a strictly positive measure.

    Immutable after construction; all queries are read-only, so instances are
    safe to share across parallel workers.

    Use the classmethods :meth:`from_dense`, :meth:`from_graph`,
    :meth:`from_coords` to construct, or :func:`load_space` to read the JSON
    format.
    """

    def __init__(self, n, measure, name, mode, *, dense=None, graph=None,
                 coords=None, p_norm=None, meta=None, disconnected=False):
        measure = np.asarray(measure, dtype=float)
        if measure.shape != (n,):
            raise ValueError(f"measure must have shape ({n},), got {measure.shape}")
        if not np.all(measure > 0):
            bad = int(np.argmin(measure))
            raise ValueError(f"measure must be strictly positive; point {bad} "
                             f"has weight {measure[bad]}")
        self.n = int(n)
        self.measure = measure
        self.total_measure = float(measure.sum())
        self.name = str(name)
        self.meta = dict(meta) if meta else {}
        self.disconnected = bool(disconnected)
        self._mode = mode
        self._dense = dense
        self._graph = graph
        self._coords = coords
        self._p_norm = p_norm

    # ------------------------------------------------------------------
    # constructors

    @classmethod
    def from_dense(cls, dist, measure, name="space", check_triangle=None,
                   meta=None, allow_inf=False):
        """Build from an explicit distance matrix.

        Validates symmetry, exact zero diagonal, positivity off the diagonal
        and (for N <= TRIANGLE_CHECK_LIMIT by default, opt-in above) the
        triangle inequality. The first violation is reported with indices.
        """
        dist = np.asarray(dist, dtype=float)
        n = dist.shape[0]
        if dist.shape != (n, n):
            raise ValueError(f"distance matrix must be square, got {dist.shape}")
        if n > DENSE_LIMIT:
            raise ValueError(f"dense provider capped at N={DENSE_LIMIT}; "
                             "use a graph- or coords-backed space")
        if np.any(np.isnan(dist)):
            i, j = np.argwhere(np.isnan(dist))[0]
            raise ValueError(f"distance is NaN at pair ({i}, {j})")
        if not allow_inf and np.any(np.isinf(dist)):
            i, j = np.argwhere(np.isinf(dist))[0]
            raise ValueError(f"distance is infinite at pair ({i}, {j})")
        diag = np.diagonal(dist)
        if np.any(diag != 0):
            i = int(np.argmax(diag != 0))
            raise ValueError(f"diagonal must be exactly zero; d({i},{i}) = {diag[i]}")
        asym = np.abs(dist - dist.T)
        if np.any(asym > 0):
            i, j = np.argwhere(asym > 0)[0]
            raise ValueError(f"metric not symmetric at pair ({i}, {j}): "
                             f"{dist[i, j]} vs {dist[j, i]}")
        off = dist + np.eye(n)  # shift diagonal away from the positivity test
        if np.any(off <= 0):
            i, j = np.argwhere(off <= 0)[0]
            raise ValueError(f"off-diagonal distance must be positive; "
                             f"d({i},{j}) = {dist[i, j]}")
        if check_triangle is None:
            check_triangle = n <= TRIANGLE_CHECK_LIMIT
        if check_triangle:
            _check_triangle(dist)
        return cls(n, measure, name, "dense", dense=dist, meta=meta)

    @classmethod
    def from_graph(cls, n, edges, measure, name="space", meta=None):
        """Build from a weighted undirected graph; the metric is the
        shortest-path distance. The graph must be connected (a disconnected
        graph does not define a finite metric)."""
        rows, cols, vals = [], [], []
        for e in edges:
            i, j, w = int(e[0]), int(e[1]), float(e[2])
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i},{j}) out of range for n={n}")
            if i == j:
                raise ValueError(f"self-loop at {i} not allowed")
            if w <= 0:
                raise ValueError(f"edge ({i},{j}) has nonpositive weight {w}")
            rows += [i, j]
            cols += [j, i]
            vals += [w, w]
        graph = csr_matrix((vals, (rows, cols)), shape=(n, n))
        ncomp, _ = connected_components(graph, directed=False)
        if ncomp != 1:
            raise ValueError(f"graph must be connected; found {ncomp} components")
        return cls(n, measure, name, "graph", graph=graph, meta=meta)

    @classmethod
    def from_coords(cls, coords, measure, p_norm=2.0, name="space", meta=None):
        """Build from points in R^k with an l^p norm (p in {1, 2, inf})."""
        coords = np.asarray(coords, dtype=float)
        if coords.ndim != 2:
            raise ValueError("coords must be a 2-d array (points x axes)")
        if p_norm not in (1, 2, np.inf, 1.0, 2.0):
            raise ValueError("p_norm must be 1, 2 or inf")
        meta = dict(meta) if meta else {}
        meta.setdefault("coords", coords)
        return cls(coords.shape[0], measure, name, "coords", coords=coords,
                   p_norm=float(p_norm), meta=meta)

    def with_measure(self, measure, name=None):
        """Copy of this space with a different measure (same metric)."""
        return MetricMeasureSpace(
            self.n, measure, name or self.name, self._mode, dense=self._dense,
            graph=self._graph, coords=self._coords, p_norm=self._p_norm,
            meta=self.meta, disconnected=self.disconnected)

    # ------------------------------------------------------------------
    # distance queries

    def dist_row(self, x, limit=None):
        """Distances from point ``x`` to all points.

        For graph-backed spaces ``limit`` truncates the Dijkstra sweep:
        entries beyond ``limit`` come back as ``inf`` (cheap for small balls
        on large spaces). Dense/coords providers ignore ``limit``.
        """
        if not 0 <= x < self.n:
            raise IndexError(f"point index {x} out of range (N={self.n})")
        if self._mode == "dense":
            return self._dense[x]
        if self._mode == "graph":
            lim = np.inf if limit is None else limit
            return dijkstra(self._graph, directed=False, indices=x, limit=lim)
        diff = self._coords - self._coords[x]
        return _norm_rows(diff, self._p_norm)

    def dist(self, x, y):
        return float(self.dist_row(x)[y])

    def dense_matrix(self):
        """Full N x N distance matrix (materialized; capped at DENSE_LIMIT)."""
        if self._mode == "dense":
            return self._dense
        if self.n > DENSE_LIMIT:
            raise ValueError(f"refusing to materialize {self.n}^2 distances")
        return np.vstack([self.dist_row(x) for x in range(self.n)])

    # ------------------------------------------------------------------
    # balls and subsets

    def ball(self, x, r):
        """Closed ball ``{y : d(x, y) <= r}`` as a sorted index array."""
        if r < 0:
            raise ValueError(f"radius must be >= 0, got {r}")
        row = self.dist_row(x, limit=r)
        return np.flatnonzero(row <= r)

    def volume(self, x, r):
        """Measure of the closed ball ``B(x, r)``."""
        return float(self.measure[self.ball(x, r)].sum())

    def ball_rows(self, r) -> Iterator[np.ndarray]:
        """Yield B(x, r) for every x in index order (memory-bounded)."""
        for x in range(self.n):
            yield self.ball(x, r)

    @property
    def graph_csr(self):
        """The adjacency CSR of a graph-backed space, else None.

        Entries appear in both directions; row x holds x's incident edge
        weights. Callers must not mutate it.
        """
        return self._graph if self._mode == "graph" else None

    def subset(self, indices) -> "Subset":
        """Wrap indices as a :class:`Subset` (deduplicated, sorted, measured)."""
        idx = np.unique(np.asarray(indices, dtype=np.int64))
        if idx.size and (idx[0] < 0 or idx[-1] >= self.n):
            raise ValueError(f"subset indices out of range for N={self.n}")
        return Subset(self, idx, float(self.measure[idx].sum()))

    def whole(self) -> "Subset":
        return Subset(self, np.arange(self.n, dtype=np.int64), self.total_measure)

    # ------------------------------------------------------------------

    def min_dist_to(self, targets, limit=None):
        """``d(x, targets)`` for every x, as one array.

        Graph-backed spaces use a multi-source Dijkstra; others take the
        running minimum over target rows.
        """
        targets = np.asarray(targets, dtype=np.int64)
        if targets.size == 0:
            return np.full(self.n, np.inf)
        if self._mode == "graph":
            lim = np.inf if limit is None else limit
            return dijkstra(self._graph, directed=False, indices=targets,
                            min_only=True, limit=lim)
        best = np.full(self.n, np.inf)
        for t in targets:
            np.minimum(best, self.dist_row(int(t)), out=best)
        return best

    def __repr__(self):
        return (f"MetricMeasureSpace({self.name!r}, n={self.n}, "
                f"mode={self._mode!r}, total_measure={self.total_measure:g})")


def _norm_rows(diff, p_norm):
    if p_norm == 1:
        return np.abs(diff).sum(axis=1)
    if p_norm == 2:
        return np.sqrt((diff * diff).sum(axis=1))
    return np.abs(diff).max(axis=1)


def _check_triangle(dist):
    """O(N^3) triangle check, vectorized one intermediate point at a time."""
    n = dist.shape[0]
    for k in range(n):
        via = dist[:, k][:, None] + dist[k, :][None, :]
        bad = dist > via + 1e-9 * np.maximum(1.0, via)
        if np.any(bad):
            i, j = np.argwhere(bad)[0]
            raise ValueError(
                f"triangle inequality fails: d({i},{j}) = {dist[i, j]} > "
                f"d({i},{k}) + d({k},{j}) = {via[i, j]}")


@dataclass(frozen=True, eq=False)
class Subset:
    """A set of point indices with its cached measure."""

    space: MetricMeasureSpace
    indices: np.ndarray  # sorted, deduplicated int64
    measure: float

    def __len__(self):
        return int(self.indices.size)

    def mask(self):
        m = np.zeros(self.space.n, dtype=bool)
        m[self.indices] = True
        return m

    def complement(self) -> "Subset":
        return self.space.subset(np.setdiff1d(
            np.arange(self.space.n, dtype=np.int64), self.indices,
            assume_unique=True))

    def __repr__(self):
        return f"Subset(n={len(self)}, measure={self.measure:g})"


def _as_indices(space, A):
    if isinstance(A, Subset):
        return A.indices
    return space.subset(A).indices


# ----------------------------------------------------------------------
# set calculus at a scale


def thicken(space, A, h):
    """Closed thickening ``[A]_h = {x : d(x, A) <= h}``."""
    if h < 0:
        raise ValueError(f"scale must be >= 0, got {h}")
    idx = _as_indices(space, A)
    if idx.size == 0:
        return space.subset([])
    dmin = space.min_dist_to(idx, limit=h)
    return space.subset(np.flatnonzero(dmin <= h))


def boundary(space, A, h):
    """Boundary at scale h: ``[A]_h & [A^c]_h`` (complement inside the space)."""
    idx = _as_indices(space, A)
    comp = np.setdiff1d(np.arange(space.n, dtype=np.int64), idx,
                        assume_unique=True)
    inner = thicken(space, idx, h).indices
    outer = thicken(space, comp, h).indices
    return space.subset(np.intersect1d(inner, outer, assume_unique=True))


@dataclass(frozen=True)
class DoublingReport:
    """Doubling constant at one scale: C_r = max_x V(x, 2r) / V(x, r)."""

    r: float
    constant: float
    worst_point: int


def doubling_profile(space, scales):
    """Doubling constants ``C_r = max_x V(x,2r)/V(x,r)`` with the maximizer.

    The reported constant is tight: at the worst point the bound
    ``V(x,2r) <= C_r V(x,r)`` holds with equality.
    """
    reports = []
    for r in scales:
        if r <= 0:
            raise ValueError(f"doubling scales must be > 0, got {r}")
        best, argbest = 1.0, 0
        for x in range(space.n):
            row = space.dist_row(x, limit=2 * r)
            v1 = space.measure[row <= r].sum()
            v2 = space.measure[row <= 2 * r].sum()
            ratio = v2 / v1
            if ratio > best:
                best, argbest = ratio, x
        reports.append(DoublingReport(float(r), float(best), int(argbest)))
    return reports


def chain_metric(space, b):
    """Chain metric d_b: infimum of chain lengths with steps <= b.

    Computed as shortest paths on the graph whose edges are the pairs at
    distance <= b, weighted by d. Always ``d_b >= d``; equality iff the space
    is b-geodesic. Pairs in different b-components get an ``inf`` sentinel
    and the returned space is flagged ``disconnected`` (not an error).
    """
    if b <= 0:
        raise ValueError(f"chain step must be > 0, got {b}")
    edges = []
    for x in range(space.n):
        row = space.dist_row(x, limit=b)
        close = np.flatnonzero(row <= b)
        for y in close:
            if y > x:
                edges.append((x, int(y), float(row[y])))
    rows = [e[0] for e in edges]
    cols = [e[1] for e in edges]
    vals = [e[2] for e in edges]
    g = csr_matrix((vals + vals, (rows + cols, cols + rows)),
                   shape=(space.n, space.n))
    ncomp, _ = connected_components(g, directed=False)
    meta = dict(space.meta)
    meta["chain"] = {"b": float(b)}
    name = f"{space.name}|chain_b={b:g}"
    if ncomp == 1:
        out = MetricMeasureSpace(space.n, space.measure, name, "graph",
                                 graph=g, meta=meta)
        return out
    dmat = dijkstra(g, directed=False)
    out = MetricMeasureSpace(space.n, space.measure, name, "dense",
                             dense=dmat, meta=meta, disconnected=True)
    return out


def geodesicity_report(space, b_grid):
    """Classify the space at each b: b-geodesic, quasi-geodesic, disconnected.

    For each b the report carries the worst multiplicative ratio
    ``max_{x != y} d_b(x,y) / max(d(x,y), b)`` and the worst additive gap
    ``max (d_b - d)``.
    """
    b_grid = list(b_grid)
    if not b_grid:
        raise ValueError("b_grid must be nonempty")
    if space.n > 2048:
        raise ValueError("geodesicity_report materializes all pairs; "
                         "capped at N=2048")
    d = space.dense_matrix()
    out = []
    for b in b_grid:
        chained = chain_metric(space, b)
        db = chained.dense_matrix()
        entry = {"b": float(b)}
        if chained.disconnected:
            entry["status"] = "disconnected"
            entry["mult"] = np.inf
            entry["add"] = np.inf
        else:
            off = ~np.eye(space.n, dtype=bool)
            ratio = db[off] / np.maximum(d[off], b)
            gap = db[off] - d[off]
            entry["mult"] = float(ratio.max()) if ratio.size else 1.0
            entry["add"] = float(gap.max()) if gap.size else 0.0
            entry["status"] = ("b-geodesic" if entry["add"] <= 1e-9 * max(1.0, b)
                               else "quasi-geodesic")
        out.append(entry)
    return out


# ----------------------------------------------------------------------
# JSON serialization
#
# {"name": str, "points": int,
#  "metric": {"type": "dense", "rows": [[...]]} | {"type": "graph",
#             "edges": [[i, j, w], ...]},
#  "measure": [w_0, ...]}


def space_to_json(space) -> dict:
    doc = {"name": space.name, "points": space.n,
           "measure": [float(w) for w in space.measure]}
    if space._mode == "graph":
        g = space._graph.tocoo()
        edges = [[int(i), int(j), float(v)]
                 for i, j, v in zip(g.row, g.col, g.data) if i < j]
        doc["metric"] = {"type": "graph", "edges": edges}
    else:
        mat = space.dense_matrix()
        if np.any(np.isinf(mat)):
            raise ValueError("cannot serialize a space with infinite "
                             "distances (disconnected chain metric)")
        doc["metric"] = {"type": "dense", "rows": [[float(v) for v in row]
                                                   for row in mat]}
    return doc


def save_space(space, path):
    with open(path, "w") as fh:
        json.dump(space_to_json(space), fh, sort_keys=True)


def space_from_json(doc) -> MetricMeasureSpace:
    for key in ("name", "points", "metric", "measure"):
        if key not in doc:
            raise ValueError(f"space file missing key {key!r}")
    n = int(doc["points"])
    measure = doc["measure"]
    if len(measure) != n:
        raise ValueError(f"measure has {len(measure)} entries, expected {n}")
    metric = doc["metric"]
    if metric.get("type") == "dense":
        rows = metric["rows"]
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError("dense metric rows must form an N x N matrix")
        return MetricMeasureSpace.from_dense(np.array(rows, dtype=float),
                                             measure, name=doc["name"])
    if metric.get("type") == "graph":
        return MetricMeasureSpace.from_graph(n, metric["edges"], measure,
                                             name=doc["name"])
    raise ValueError(f"unknown metric type {metric.get('type')!r}")


def load_space(path) -> MetricMeasureSpace:
    with open(path) as fh:
        doc = json.load(fh)
    return space_from_json(doc)
