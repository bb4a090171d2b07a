"""Recursive separator-based reachability oracle.

Each recursion level holds a clique separator of the current disk set and a
via-clique reach oracle per separator clique (MinIn/MaxOut rows over the
level's nodes, stacked into two matrices for fast queries).  A query first
asks every level clique "does s reach t through you?"; if all say no, s can
reach t only when both endpoints fell into the same part, so the query
descends into that part's sub-oracle.  Sets at or below the base cutoff
store their exact reachability table.

Answers are exact: there is no approximation anywhere in this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import TransmissionPoint
from .graph import TransmissionGraph, build_graph, hop_rows, induced_subgraph
from .separator import CliqueSeparator, build_separator
from .viapath import (TransitivePath, ViaCliqueOracle, ViaPathReachOracle,
                      decompose_stabbed_clique, reach_arrays_for_paths)

ASSIGN_A, ASSIGN_B, ASSIGN_SEP = 0, 1, 2
_ASSIGN_NAMES = {ASSIGN_A: "A", ASSIGN_B: "B", ASSIGN_SEP: "SEPARATOR"}


def _assignment_arrays(sep: CliqueSeparator, n: int):
    assign = np.full(n, ASSIGN_SEP, dtype=np.int8)
    child_local = np.full(n, -1, dtype=np.int64)
    for code, part in ((ASSIGN_A, sep.part_a), (ASSIGN_B, sep.part_b)):
        ids = np.asarray(part, dtype=np.int64)
        assign[ids] = code
        child_local[ids] = np.arange(len(ids), dtype=np.int64)
    return assign, child_local


def _clique_paths_flat(g: TransmissionGraph, sep: CliqueSeparator):
    """Decompose every separator clique; returns (flat paths, clique slices)."""
    paths: list[TransitivePath] = []
    slices: list[tuple[int, int]] = []
    for c in sep.cliques:
        members = [g.points[i] for i in c.member_ids]
        ps = decompose_stabbed_clique(members, c.stab_point)
        slices.append((len(paths), len(paths) + len(ps)))
        paths.extend(ps)
    return paths, slices


@dataclass
class ReachLevel:
    separator: CliqueSeparator
    clique_oracles: list[ViaCliqueOracle]
    min_in: np.ndarray            # [P x n] float32
    max_out: np.ndarray           # [P x n] float32
    assign: np.ndarray            # [n] int8
    child_local: np.ndarray       # [n] int64, -1 on separator members


@dataclass
class ReachabilityOracle:
    n: int
    depth: int
    base_table: np.ndarray | None = None
    level: ReachLevel | None = None
    child_a: "ReachabilityOracle | None" = None
    child_b: "ReachabilityOracle | None" = None

    @property
    def level_cliques(self) -> list[ViaCliqueOracle]:
        return self.level.clique_oracles if self.level else []

    @property
    def part_assignment(self) -> dict[int, str]:
        if self.level is None:
            return {}
        return {i: _ASSIGN_NAMES[int(a)] for i, a in enumerate(self.level.assign)}

    def stored_entries(self) -> int:
        if self.base_table is not None:
            return int(self.base_table.size)
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


def _build_reach(g: TransmissionGraph, base_cutoff: int) -> ReachabilityOracle:
    n = g.n
    if n <= base_cutoff:
        if n == 0:
            return ReachabilityOracle(n=0, depth=0, base_table=np.zeros((0, 0), dtype=bool))
        table = np.isfinite(hop_rows(g, np.arange(n), "forward"))
        return ReachabilityOracle(n=n, depth=0, base_table=table)

    sep = build_separator(g.points)
    paths, slices = _clique_paths_flat(g, sep)
    min_in, max_out = reach_arrays_for_paths(g, paths)
    clique_oracles = []
    for (lo, hi), c in zip(slices, sep.cliques):
        oracles = [ViaPathReachOracle(paths[i], min_in[i], max_out[i]) for i in range(lo, hi)]
        clique_oracles.append(ViaCliqueOracle(paths=paths[lo:hi], reach_oracles=oracles))
    assign, child_local = _assignment_arrays(sep, n)

    child_a = _build_reach(induced_subgraph(g, sep.part_a), base_cutoff) if sep.part_a else None
    child_b = _build_reach(induced_subgraph(g, sep.part_b), base_cutoff) if sep.part_b else None
    depth = 1 + max(child_a.depth if child_a else 0, child_b.depth if child_b else 0)
    bound = math.log(max(n, 2)) / math.log(145.0 / 144.0) + 8
    assert depth <= bound, f"recursion depth {depth} exceeds {bound:.1f}"

    level = ReachLevel(separator=sep, clique_oracles=clique_oracles,
                       min_in=min_in, max_out=max_out,
                       assign=assign, child_local=child_local)
    return ReachabilityOracle(n=n, depth=depth, level=level,
                              child_a=child_a, child_b=child_b)


def build_reach_oracle(pts: list[TransmissionPoint], base_cutoff: int = 64,
                       graph: TransmissionGraph | None = None) -> ReachabilityOracle:
    """Build the oracle for the given sites.

    ``base_cutoff`` (>= 1) bounds the size of the exact-table base case; the
    prebuilt ``graph`` of the same points may be passed to avoid rebuilding.
    """
    if base_cutoff < 1:
        raise ValueError("base_cutoff must be >= 1")
    g = graph if graph is not None else build_graph(pts)
    return _build_reach(g, base_cutoff)


def query_reach(o: ReachabilityOracle, s: int, t: int) -> bool:
    """Exact reachability: can s reach t along arcs?"""
    o.check_id(s)
    o.check_id(t)
    if s == t:
        return True
    cur, ls, lt = o, s, t
    while True:
        if cur.base_table is not None:
            return bool(cur.base_table[ls, lt])
        lev = cur.level
        if lev.min_in.shape[0] and bool(np.any(lev.min_in[:, ls] <= lev.max_out[:, lt])):
            return True
        a, b = lev.assign[ls], lev.assign[lt]
        if a != b or a == ASSIGN_SEP:
            return False
        cur = cur.child_a if a == ASSIGN_A else cur.child_b
        ls, lt = int(lev.child_local[ls]), int(lev.child_local[lt])


def _reach_from(cur: ReachabilityOracle, ls: int) -> np.ndarray:
    if cur.base_table is not None:
        return cur.base_table[ls].copy()
    lev = cur.level
    if lev.min_in.shape[0]:
        res = (lev.min_in[:, ls:ls + 1] <= lev.max_out).any(axis=0)
    else:
        res = np.zeros(cur.n, dtype=bool)
    a = int(lev.assign[ls])
    if a != ASSIGN_SEP:
        child = cur.child_a if a == ASSIGN_A else cur.child_b
        part = np.nonzero(lev.assign == a)[0]
        res[part] |= _reach_from(child, int(lev.child_local[ls]))
    res[ls] = True
    return res


def query_reach_from(o: ReachabilityOracle, s: int) -> np.ndarray:
    """Boolean vector over all nodes: query_reach(o, s, t) for every t."""
    o.check_id(s)
    return _reach_from(o, s)
