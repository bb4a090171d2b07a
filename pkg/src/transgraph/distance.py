"""Recursive separator-based approximate hop-distance oracle.

Same recursion shape as the reachability oracle, with leveled via-path
distance arrays per separator clique and an exact hop-distance table at the
base.  Hop budgets per level use that level's node count; distances feeding
the arrays are measured in the level's induced subgraph, which is where any
shortest path lives until it first touches a separator clique.

For reachable pairs the returned value d* satisfies
d_hop <= d* <= (1+eps) * d_hop + 2, and d* is inf exactly on unreachable
pairs.  Queries return the raw (1+eps)^j + (1+eps)^k + 1 real; callers may
floor it to an integer hop estimate.
"""

from __future__ import annotations

import math

from dataclasses import dataclass

import numpy as np

from .geometry import TransmissionPoint
from .graph import TransmissionGraph, build_graph, hop_rows, induced_subgraph
from .reachability import ASSIGN_A, ASSIGN_SEP, _ASSIGN_NAMES, \
    _assignment_arrays, _clique_paths_flat
from .separator import CliqueSeparator, build_separator
from .viapath import ViaCliqueOracle, ViaPathDistOracle, dist_arrays_for_paths


@dataclass
class DistLevel:
    separator: CliqueSeparator
    clique_oracles: list[ViaCliqueOracle]
    min_in: np.ndarray            # [P x n x J] float32
    max_out: np.ndarray           # [P x n x J] float32
    thresholds: np.ndarray        # [J] float64
    cost: np.ndarray              # [J x J]: thr_j + thr_k + 1
    assign: np.ndarray
    child_local: np.ndarray
    eff_nj: int = 0               # columns past the first saturated budget are
                                  # duplicates; the optimum never needs them
    _entry_cost: list | None = None    # per path: flipped MinIn rows for G lookups
    _exit_cost: list | None = None     # per path: H[t, a] = cheapest budget from index >= a to t


@dataclass
class DistanceOracle:
    n: int
    eps: float
    depth: int
    base_apsp: np.ndarray | None = None
    level: DistLevel | None = None
    child_a: "DistanceOracle | None" = None
    child_b: "DistanceOracle | None" = None

    @property
    def level_cliques(self) -> list[ViaCliqueOracle]:
        return self.level.clique_oracles if self.level else []

    @property
    def part_assignment(self) -> dict[int, str]:
        if self.level is None:
            return {}
        return {i: _ASSIGN_NAMES[int(a)] for i, a in enumerate(self.level.assign)}

    def stored_entries(self) -> int:
        if self.base_apsp is not None:
            return int(self.base_apsp.size)
        total = int(self.level.min_in.size + self.level.max_out.size)
        for child in (self.child_a, self.child_b):
            if child is not None:
                total += child.stored_entries()
        return total

    def recursion_depth(self) -> int:
        return self.depth

    def check_id(self, v: int) -> None:
        if not (isinstance(v, (int, np.integer)) and 0 <= v < self.n):
            from .graph import UnknownNodeError
            raise UnknownNodeError(f"node id {v!r} not in 0..{self.n - 1}")


def _build_dist(g: TransmissionGraph, eps: float, base_cutoff: int) -> DistanceOracle:
    n = g.n
    if n <= base_cutoff:
        if n == 0:
            return DistanceOracle(n=0, eps=eps, depth=0, base_apsp=np.zeros((0, 0), dtype=np.float32))
        apsp = hop_rows(g, np.arange(n), "forward").astype(np.float32)
        return DistanceOracle(n=n, eps=eps, depth=0, base_apsp=apsp)

    sep = build_separator(g.points)
    paths, slices = _clique_paths_flat(g, sep)
    min_in, max_out, thr = dist_arrays_for_paths(g, paths, eps)
    clique_oracles = []
    for (lo, hi), c in zip(slices, sep.cliques):
        oracles = [ViaPathDistOracle(paths[i], eps, thr, min_in[i], max_out[i])
                   for i in range(lo, hi)]
        clique_oracles.append(ViaCliqueOracle(paths=paths[lo:hi], dist_oracles=oracles))
    assign, child_local = _assignment_arrays(sep, n)

    child_a = _build_dist(induced_subgraph(g, sep.part_a), eps, base_cutoff) if sep.part_a else None
    child_b = _build_dist(induced_subgraph(g, sep.part_b), eps, base_cutoff) if sep.part_b else None
    depth = 1 + max(child_a.depth if child_a else 0, child_b.depth if child_b else 0)

    cost = thr[:, None] + thr[None, :] + 1.0
    eff_nj = min(len(thr), int(np.searchsorted(thr, n - 1.0)) + 1)
    level = DistLevel(separator=sep, clique_oracles=clique_oracles,
                      min_in=min_in, max_out=max_out, thresholds=thr, cost=cost,
                      assign=assign, child_local=child_local, eff_nj=eff_nj)
    return DistanceOracle(n=n, eps=eps, depth=depth, level=level,
                          child_a=child_a, child_b=child_b)


def build_dist_oracle(pts: list[TransmissionPoint], eps: float, base_cutoff: int = 64,
                      graph: TransmissionGraph | None = None) -> DistanceOracle:
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if base_cutoff < 1:
        raise ValueError("base_cutoff must be >= 1")
    g = graph if graph is not None else build_graph(pts)
    return _build_dist(g, eps, base_cutoff)


def _level_dist(lev: DistLevel, ls: int, lt: int) -> float:
    if not lev.min_in.shape[0]:
        return math.inf
    nj = lev.eff_nj
    a = lev.min_in[:, ls, :nj]      # [P x J]
    b = lev.max_out[:, lt, :nj]     # [P x J]
    # the saturated budget admits every finite hop distance, so infeasibility
    # there means s cannot reach t through any clique of this level
    if not bool(np.any(a[:, -1] <= b[:, -1])):
        return math.inf
    feasible = a[:, :, None] <= b[:, None, :]
    return float(np.where(feasible, lev.cost[None, :nj, :nj], np.inf).min())


def query_dist(o: DistanceOracle, s: int, t: int) -> float:
    """Approximate hop distance; inf exactly when s cannot reach t."""
    o.check_id(s)
    o.check_id(t)
    if s == t:
        return 0.0
    best = math.inf
    cur, ls, lt = o, s, t
    while True:
        if cur.base_apsp is not None:
            return min(best, float(cur.base_apsp[ls, lt]))
        lev = cur.level
        best = min(best, _level_dist(lev, ls, lt))
        a, b = lev.assign[ls], lev.assign[lt]
        if a != b or a == ASSIGN_SEP:
            return best
        cur = cur.child_a if a == ASSIGN_A else cur.child_b
        ls, lt = int(lev.child_local[ls]), int(lev.child_local[lt])


def _prepare_level_costs(lev: DistLevel, n: int) -> None:
    """Per-path entry/exit cost tables for vectorized queries.

    For a path of length L, the level answer factors through the entry index:
    min over feasible (j, k) of thr_j + thr_k equals min over a in 0..L-1 of
    G[s, a] + H[t, a], with G[s, a] the cheapest budget whose MinIn is <= a
    and H[t, a] the cheapest budget whose MaxOut is >= a.  H is independent
    of the source, so it is cached; G needs one small searchsorted per query.
    """
    nj = lev.eff_nj
    thr = lev.thresholds[:nj]
    lev._entry_cost = []
    lev._exit_cost = []
    for p, oracle in enumerate([o for c in lev.clique_oracles for o in c.dist_oracles]):
        length = len(oracle.path.node_ids)
        flipped = np.ascontiguousarray(lev.min_in[p, :, nj - 1::-1])    # rows non-decreasing
        lev._entry_cost.append(flipped)
        b = np.clip(lev.max_out[p, :, :nj].astype(np.float64), -1.0, float(length))
        span = float(length + 2)
        row_off = np.arange(n, dtype=np.float64)[:, None] * span
        b_off = (b + row_off).ravel()
        q_off = (np.arange(length, dtype=np.float64)[None, :] + row_off).ravel()
        ks = np.searchsorted(b_off, q_off).reshape(n, length)
        ks -= np.arange(n, dtype=np.int64)[:, None] * nj
        h = np.where(ks < nj, thr[np.minimum(ks, nj - 1)], np.inf)
        lev._exit_cost.append(h)


def _entry_costs(lev: DistLevel, p: int, ls: int, length: int) -> np.ndarray:
    """G[ls, .]: cheapest budget reaching path index <= a, for each a."""
    nj = lev.eff_nj
    row = lev._entry_cost[p][ls]
    cnt = np.searchsorted(row, np.arange(length, dtype=np.float32), side="right")
    idx = np.clip(nj - cnt, 0, nj - 1)
    return np.where(cnt > 0, lev.thresholds[idx], np.inf)


def _level_dist_vector(lev: DistLevel, ls: int, n: int) -> np.ndarray:
    """Level contribution of query_dist(s, .) for every target at once."""
    if not lev.min_in.shape[0]:
        return np.full(n, np.inf)
    if lev._exit_cost is None:
        _prepare_level_costs(lev, n)
    res = np.full(n, np.inf)
    for p, h in enumerate(lev._exit_cost):
        length = h.shape[1]
        g = _entry_costs(lev, p, ls, length)
        if np.isinf(g).all():
            continue
        np.minimum(res, (g[None, :] + h).min(axis=1) + 1.0, out=res)
    return res


def _dist_from(cur: DistanceOracle, ls: int) -> np.ndarray:
    if cur.base_apsp is not None:
        return cur.base_apsp[ls].astype(np.float64)
    lev = cur.level
    res = _level_dist_vector(lev, ls, cur.n)
    a = int(lev.assign[ls])
    if a != ASSIGN_SEP:
        child = cur.child_a if a == ASSIGN_A else cur.child_b
        part = np.nonzero(lev.assign == a)[0]
        res[part] = np.minimum(res[part], _dist_from(child, int(lev.child_local[ls])))
    return res


def query_dist_from(o: DistanceOracle, s: int) -> np.ndarray:
    """Vector of query_dist(o, s, t) over every t (with d(s, s) = 0)."""
    o.check_id(s)
    res = _dist_from(o, s)
    res[s] = 0.0
    return res


def _level_dist_matrix(lev: DistLevel, n: int) -> np.ndarray:
    if not lev.min_in.shape[0]:
        return np.full((n, n), np.inf)
    if lev._exit_cost is None:
        _prepare_level_costs(lev, n)
    nj = lev.eff_nj
    res = np.full((n, n), np.inf)
    for p, h in enumerate(lev._exit_cost):
        length = h.shape[1]
        flipped = lev._entry_cost[p]
        span = float(nj + 2)
        row_off = np.arange(n, dtype=np.float64)[:, None] * span
        f_off = (np.clip(flipped.astype(np.float64), -1.0, span - 2.0) + row_off).ravel()
        q_off = (np.arange(length, dtype=np.float64)[None, :] + row_off).ravel()
        # count of budgets with MinIn <= a, per (s, a)
        cnt = np.searchsorted(f_off, q_off, side="right").reshape(n, length)
        cnt -= np.arange(n, dtype=np.int64)[:, None] * nj
        g = np.where(cnt > 0, lev.thresholds[np.maximum(nj - cnt, 0)], np.inf)
        np.minimum(res, (g[:, None, :] + h[None, :, :]).min(axis=2) + 1.0, out=res)
    return res


def _dist_matrix(cur: DistanceOracle) -> np.ndarray:
    if cur.base_apsp is not None:
        return cur.base_apsp.astype(np.float64)
    lev = cur.level
    res = _level_dist_matrix(lev, cur.n)
    for code, child in ((0, cur.child_a), (1, cur.child_b)):
        if child is not None:
            part = np.nonzero(lev.assign == code)[0]
            sub = _dist_matrix(child)
            block = res[np.ix_(part, part)]
            res[np.ix_(part, part)] = np.minimum(block, sub)
    return res


def query_dist_matrix(o: DistanceOracle) -> np.ndarray:
    """All-pairs matrix of query_dist values (diagonal 0)."""
    res = _dist_matrix(o)
    np.fill_diagonal(res, 0.0)
    return res
