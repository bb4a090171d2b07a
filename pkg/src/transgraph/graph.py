"""Directed transmission graph over sites with transmission radii.

An arc (p, q) exists iff p != q and q lies in p's transmission disk.  The
graph is immutable after construction; adjacency is kept in CSR form (plus
its transpose) and exposed as plain Python lists on demand.

This module also provides the exact breadth-first oracles used as ground
truth throughout the test harness, strongly-connected-component
condensation, and min/max label propagation over reachability (the builder
backend for the via-path arrays).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra

from .geometry import TransmissionPoint

#: Distinguished hop-distance value for "no directed path".
UNREACHABLE = math.inf


class DuplicateIdError(ValueError):
    """Input point ids are not the dense range 0..n-1."""


class UnknownNodeError(KeyError):
    """A query referenced a node id outside 0..n-1."""


@dataclass
class TransmissionGraph:
    points: list[TransmissionPoint]
    csr: sp.csr_matrix                  # out-arcs, boolean adjacency
    csr_t: sp.csr_matrix                # in-arcs (exact transpose)
    _out_lists: list[list[int]] | None = field(default=None, repr=False)
    _in_lists: list[list[int]] | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def arc_count(self) -> int:
        return int(self.csr.nnz)

    @property
    def out_adjacency(self) -> list[list[int]]:
        if self._out_lists is None:
            self._out_lists = _csr_to_lists(self.csr)
        return self._out_lists

    @property
    def in_adjacency(self) -> list[list[int]]:
        if self._in_lists is None:
            self._in_lists = _csr_to_lists(self.csr_t)
        return self._in_lists

    def positions(self) -> np.ndarray:
        return np.array([(p.pos.x, p.pos.y) for p in self.points], dtype=float).reshape(-1, 2)

    def radii(self) -> np.ndarray:
        return np.array([p.radius for p in self.points], dtype=float)

    def check_id(self, v: int) -> None:
        if not (isinstance(v, (int, np.integer)) and 0 <= v < self.n):
            raise UnknownNodeError(f"node id {v!r} not in 0..{self.n - 1}")


def _csr_to_lists(m: sp.csr_matrix) -> list[list[int]]:
    indptr, indices = m.indptr, m.indices
    return [indices[indptr[i]:indptr[i + 1]].tolist() for i in range(m.shape[0])]


def _arc_pairs_quadratic(xs, ys, rs):
    n = len(xs)
    rows, cols = [], []
    chunk = max(1, (1 << 22) // max(n, 1))
    r2 = rs * rs
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        dx = xs[lo:hi, None] - xs[None, :]
        dy = ys[lo:hi, None] - ys[None, :]
        mask = dx * dx + dy * dy <= r2[lo:hi, None]
        mask[np.arange(lo, hi) - lo, np.arange(lo, hi)] = False
        r, c = np.nonzero(mask)
        rows.append(r + lo)
        cols.append(c)
    return np.concatenate(rows), np.concatenate(cols)


def _arc_pairs_grid(xs, ys, rs):
    # Uniform grid keyed on the largest radius: every target of an arc from p
    # lies within r(p) <= r_max of p, hence in the 3x3 cell neighbourhood.
    n = len(xs)
    cell = float(rs.max())
    ix = np.floor(xs / cell).astype(np.int64)
    iy = np.floor(ys / cell).astype(np.int64)
    groups: dict[tuple[int, int], np.ndarray] = {}
    order = np.lexsort((iy, ix))
    sx, sy = ix[order], iy[order]
    start = 0
    for i in range(1, n + 1):
        if i == n or sx[i] != sx[start] or sy[i] != sy[start]:
            groups[(int(sx[start]), int(sy[start]))] = order[start:i]
            start = i
    rows, cols = [], []
    for (cx, cy), src in groups.items():
        cand = [groups[k] for dxc in (-1, 0, 1) for dyc in (-1, 0, 1)
                if (k := (cx + dxc, cy + dyc)) in groups]
        cand = np.concatenate(cand)
        dx = xs[src, None] - xs[None, cand]
        dy = ys[src, None] - ys[None, cand]
        mask = dx * dx + dy * dy <= (rs[src] * rs[src])[:, None]
        mask &= src[:, None] != cand[None, :]
        r, c = np.nonzero(mask)
        rows.append(src[r])
        cols.append(cand[c])
    if not rows:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(rows), np.concatenate(cols)


def _grid_candidate_estimate(xs, ys, rs) -> float:
    cell = float(rs.max())
    ix = np.floor(xs / cell).astype(np.int64)
    iy = np.floor(ys / cell).astype(np.int64)
    key = ix * 2_000_003 + iy
    uniq, inv, counts = np.unique(key, return_inverse=True, return_counts=True)
    # Upper bound: assume every neighbour cell is as full as the fullest.
    per_point = counts[inv].astype(float) * 9.0
    return float(per_point.sum())


def build_graph(pts: list[TransmissionPoint], method: str = "auto") -> TransmissionGraph:
    """Build the transmission graph; arcs (p, q) iff |pq| <= r(p), no self-loops.

    ``method`` is "quadratic" (chunked all-pairs scan), "grid" (uniform grid
    keyed on the largest radius), or "auto".  Output is identical either way.
    """
    n = len(pts)
    ids = sorted(p.id for p in pts)
    if ids != list(range(n)):
        raise DuplicateIdError("point ids must be exactly 0..n-1 with no duplicates")
    by_id = sorted(pts, key=lambda p: p.id)
    xs = np.array([p.pos.x for p in by_id], dtype=float)
    ys = np.array([p.pos.y for p in by_id], dtype=float)
    rs = np.array([p.radius for p in by_id], dtype=float)

    if n <= 1:
        rows = cols = np.empty(0, dtype=np.int64)
    else:
        if method == "auto":
            method = "grid" if _grid_candidate_estimate(xs, ys, rs) < n * n / 4 else "quadratic"
        if method == "grid":
            rows, cols = _arc_pairs_grid(xs, ys, rs)
        elif method == "quadratic":
            rows, cols = _arc_pairs_quadratic(xs, ys, rs)
        else:
            raise ValueError(f"unknown build method {method!r}")

    data = np.ones(len(rows), dtype=np.uint8)
    csr = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    csr.sort_indices()
    csr_t = csr.T.tocsr()
    csr_t.sort_indices()
    return TransmissionGraph(points=by_id, csr=csr, csr_t=csr_t)


def induced_subgraph(g: TransmissionGraph, ids: list[int] | np.ndarray) -> TransmissionGraph:
    """Subgraph on ``ids``, renumbered densely in the given order.

    Restricting the arc rule to a subset equals restricting the adjacency,
    so the result is the transmission graph of the sub-point-set.
    """
    idx = np.asarray(ids, dtype=np.int64)
    sub = g.csr[idx][:, idx].tocsr()
    sub.sort_indices()
    sub_t = sub.T.tocsr()
    sub_t.sort_indices()
    pts = [TransmissionPoint(k, g.points[i].pos, g.points[i].radius) for k, i in enumerate(idx)]
    return TransmissionGraph(points=pts, csr=sub, csr_t=sub_t)


# ---------------------------------------------------------------------------
# Exact hop distances (breadth-first search; the ground-truth oracle)
# ---------------------------------------------------------------------------

def hop_distance_bfs(g: TransmissionGraph, s: int, t: int):
    """Exact hop distance from s to t; UNREACHABLE if there is no path."""
    g.check_id(s)
    g.check_id(t)
    if s == t:
        return 0
    adj = g.out_adjacency
    dist = [-1] * g.n
    dist[s] = 0
    q = deque([s])
    while q:
        v = q.popleft()
        dv = dist[v] + 1
        for w in adj[v]:
            if dist[w] < 0:
                if w == t:
                    return dv
                dist[w] = dv
                q.append(w)
    return UNREACHABLE


def all_hop_distances(g: TransmissionGraph, source: int, direction: str = "forward") -> np.ndarray:
    """d(source, .) for "forward", d(., source) for "reverse"; inf if unreachable."""
    g.check_id(source)
    if direction == "forward":
        adj = g.out_adjacency
    elif direction == "reverse":
        adj = g.in_adjacency
    else:
        raise ValueError(f"direction must be 'forward' or 'reverse', got {direction!r}")
    dist = np.full(g.n, np.inf)
    dist[source] = 0.0
    q = deque([source])
    seen = [False] * g.n
    seen[source] = True
    while q:
        v = q.popleft()
        d = dist[v] + 1.0
        for w in adj[v]:
            if not seen[w]:
                seen[w] = True
                dist[w] = d
                q.append(w)
    return dist


def hop_rows(g: TransmissionGraph, sources, direction: str = "forward") -> np.ndarray:
    """Hop distances from many sources at once, via C breadth-first search.

    Returns a float matrix [len(sources) x n]; row k holds d(sources[k], .)
    for "forward" and d(., sources[k]) for "reverse".  Agrees exactly with
    all_hop_distances.
    """
    if direction not in ("forward", "reverse"):
        raise ValueError(f"direction must be 'forward' or 'reverse', got {direction!r}")
    src = np.asarray(sources, dtype=np.int64)
    if src.size == 0:
        return np.empty((0, g.n))
    m = g.csr if direction == "forward" else g.csr_t
    return _csgraph_dijkstra(m, directed=True, indices=src, unweighted=True)


# ---------------------------------------------------------------------------
# Condensation and label propagation
# ---------------------------------------------------------------------------

@dataclass
class Condensation:
    """SCC condensation with components renumbered in topological order.

    ``component_of[v]`` is the component of node v; every arc of ``dag_out``
    goes from a lower component id to a strictly higher one.
    """

    component_of: np.ndarray
    dag_out: list[np.ndarray]

    @property
    def n_components(self) -> int:
        return len(self.dag_out)


def build_condensation(g: TransmissionGraph) -> Condensation:
    n = g.n
    if n == 0:
        return Condensation(np.empty(0, dtype=np.int64), [])
    ncomp, labels = connected_components(g.csr, directed=True, connection="strong")
    tails = np.repeat(np.arange(n, dtype=np.int64), np.diff(g.csr.indptr))
    heads = g.csr.indices.astype(np.int64)
    ct, ch = labels[tails], labels[heads]
    keep = ct != ch
    edges = np.unique(ct[keep] * np.int64(ncomp) + ch[keep])
    etail = (edges // ncomp).astype(np.int64)
    ehead = (edges % ncomp).astype(np.int64)

    indeg = np.bincount(ehead, minlength=ncomp)
    out: list[list[int]] = [[] for _ in range(ncomp)]
    for a, b in zip(etail.tolist(), ehead.tolist()):
        out[a].append(b)
    order = [c for c in range(ncomp) if indeg[c] == 0]
    pos = 0
    indeg = indeg.copy()
    while pos < len(order):
        c = order[pos]
        pos += 1
        for b in out[c]:
            indeg[b] -= 1
            if indeg[b] == 0:
                order.append(b)
    assert len(order) == ncomp, "condensation is cyclic; SCC labelling is broken"

    rank = np.empty(ncomp, dtype=np.int64)
    rank[np.array(order, dtype=np.int64)] = np.arange(ncomp, dtype=np.int64)
    component_of = rank[labels]
    dag_out = [np.empty(0, dtype=np.int64) for _ in range(ncomp)]
    for c in range(ncomp):
        if out[c]:
            dag_out[rank[c]] = np.sort(rank[np.array(out[c], dtype=np.int64)])
    return Condensation(component_of=component_of, dag_out=dag_out)


def _propagate_over_reachable(cond: Condensation, label_matrix: np.ndarray, mode: str) -> np.ndarray:
    """best-over-reachable for every column of label_matrix [n x k]."""
    ncomp = cond.n_components
    k = label_matrix.shape[1]
    if mode == "min":
        ufunc, identity = np.minimum, np.inf
    elif mode == "max":
        ufunc, identity = np.maximum, -np.inf
    else:
        raise ValueError(f"mode must be 'min' or 'max', got {mode!r}")
    dtype = label_matrix.dtype if np.issubdtype(label_matrix.dtype, np.floating) else np.float64
    vals = np.full((ncomp, k), identity, dtype=dtype)
    ufunc.at(vals, cond.component_of, label_matrix)
    for c in range(ncomp - 1, -1, -1):
        succ = cond.dag_out[c]
        if succ.size:
            vals[c] = ufunc(vals[c], ufunc.reduce(vals[succ], axis=0))
    return vals[cond.component_of]


def min_label_reach(g: TransmissionGraph, labels, mode: str = "min",
                    direction: str = "forward",
                    _cond: Condensation | None = None) -> np.ndarray:
    """For every node v, the best label over all nodes reachable from v.

    ``labels`` uses the identity element (+inf for min, -inf for max) for
    unlabeled nodes.  "forward" follows out-arcs; "reverse" follows in-arcs,
    i.e. propagates over the set of nodes that v reaches in the transpose.
    Computed by SCC condensation plus one DAG pass, O(n + m).
    """
    lab = np.asarray(labels, dtype=float).reshape(-1, 1)
    if lab.shape[0] != g.n:
        raise ValueError(f"labels must have length {g.n}, got {lab.shape[0]}")
    if direction == "reverse":
        gg = TransmissionGraph(points=g.points, csr=g.csr_t, csr_t=g.csr)
        cond = _cond if _cond is not None else build_condensation(gg)
    elif direction == "forward":
        cond = _cond if _cond is not None else build_condensation(g)
    else:
        raise ValueError(f"direction must be 'forward' or 'reverse', got {direction!r}")
    return _propagate_over_reachable(cond, lab, mode)[:, 0]
