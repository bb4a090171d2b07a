"""Via-path and via-clique oracles.

A transitive path is an ordered node sequence in which every node has an arc
to every later node.  The points of a stabbed clique split into at most six
such paths, one per canonical cone around the stab point: within one cone the
angle between two members seen from the stab point is under 60 degrees, so
the member with the larger radius reaches the other.

The flat reach oracle stores, for every ambient node, the smallest path
index it can reach (MinIn) and the largest path index that reaches it
(MaxOut); "s reaches t via the path" iff MinIn[s] <= MaxOut[t], because the
transitive arc from entry to exit closes the route.  The leveled distance
oracle repeats the arrays once per hop budget (1+eps)^j and answers with the
smallest feasible (1+eps)^j + (1+eps)^k + 1, the +1 paying for the
connecting arc.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Point, TransmissionPoint, canonical_cone_index, disk_contains, disks_intersect
from .graph import TransmissionGraph, build_condensation, hop_rows, _propagate_over_reachable


class NotStabbedError(ValueError):
    """A clique member's disk does not contain the claimed stab point."""


class NotACliqueError(ValueError):
    """The member disks do not pairwise intersect."""


@dataclass(frozen=True)
class TransitivePath:
    node_ids: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.node_ids)


def is_transitive_path(g: TransmissionGraph, path: TransitivePath) -> bool:
    """Check that every node has an arc to all its successors."""
    ids = np.asarray(path.node_ids, dtype=np.int64)
    if ids.size <= 1:
        return True
    sub = g.csr[ids][:, ids].toarray().astype(bool)
    iu = np.triu_indices(ids.size, k=1)
    return bool(sub[iu].all())


def decompose_stabbed_clique(members: list[TransmissionPoint], x_c: Point) -> list[TransitivePath]:
    """Split a stabbed clique into at most six transitive paths.

    Members are grouped by the cone around ``x_c`` containing them (members
    coincident with the stab point go to cone 1) and each group is ordered by
    decreasing radius, ties by ascending id.
    """
    groups: dict[int, list[TransmissionPoint]] = {}
    for m in members:
        if not disk_contains(m.disk, x_c):
            raise NotStabbedError(f"disk of node {m.id} does not contain the stab point")
        if m.pos.x == x_c.x and m.pos.y == x_c.y:
            cone = 1
        else:
            cone = canonical_cone_index(x_c, m.pos)
        groups.setdefault(cone, []).append(m)
    paths = []
    for cone in sorted(groups):
        ordered = sorted(groups[cone], key=lambda m: (-m.radius, m.id))
        paths.append(TransitivePath(tuple(m.id for m in ordered)))
    return paths


def stab_general_clique(members: list[TransmissionPoint]) -> list[tuple[Point, list[TransmissionPoint]]]:
    """Partition an arbitrary clique into at most 49 stabbed sub-cliques.

    With r0 the smallest member radius and c0 its center, every member
    intersects D(c0, r0) and therefore contains a ball of radius r0 centered
    within 2*r0 of c0; a 7x7 grid of spacing r0 over the square of half-edge
    3*r0 around c0 puts a point in every such ball.  Each member joins the
    first grid point its disk contains.
    """
    if not members:
        return []
    k = len(members)
    for i in range(k):
        for j in range(i + 1, k):
            if not disks_intersect(members[i].disk, members[j].disk):
                raise NotACliqueError(
                    f"disks of nodes {members[i].id} and {members[j].id} do not intersect")
    smallest = min(members, key=lambda m: (m.radius, m.id))
    c0, r0 = smallest.pos, smallest.radius
    candidates = [Point(c0.x + ix * r0, c0.y + iy * r0)
                  for iy in range(-3, 4) for ix in range(-3, 4)]
    groups: dict[int, list[TransmissionPoint]] = {}
    for m in members:
        for ci, cand in enumerate(candidates):
            if disk_contains(m.disk, cand):
                groups.setdefault(ci, []).append(m)
                break
        else:
            raise AssertionError("stabbing grid failed to cover a clique member")
    return [(candidates[ci], groups[ci]) for ci in sorted(groups)]


# ---------------------------------------------------------------------------
# Flat reach oracle
# ---------------------------------------------------------------------------

@dataclass
class ViaPathReachOracle:
    path: TransitivePath
    min_in: np.ndarray    # [n] float; inf where no path node is reachable
    max_out: np.ndarray   # [n] float; -inf where no path node reaches


def reach_arrays_for_paths(g: TransmissionGraph, paths: list[TransitivePath]):
    """MinIn/MaxOut rows for many paths over one graph, batched.

    Returns (min_in, max_out), each [len(paths) x n] float32.  Equivalent to
    min_label_reach per path but shares the two condensation passes.
    """
    n, p = g.n, len(paths)
    min_lab = np.full((n, p), np.inf, dtype=np.float32)
    max_lab = np.full((n, p), -np.inf, dtype=np.float32)
    for col, path in enumerate(paths):
        ids = np.asarray(path.node_ids, dtype=np.int64)
        idx = np.arange(len(ids), dtype=np.float32)
        min_lab[ids, col] = idx
        max_lab[ids, col] = idx
    if p == 0:
        return np.empty((0, n), np.float32), np.empty((0, n), np.float32)
    cond_fwd = build_condensation(g)
    min_in = _propagate_over_reachable(cond_fwd, min_lab, "min").T.astype(np.float32)
    rev = TransmissionGraph(points=g.points, csr=g.csr_t, csr_t=g.csr)
    cond_rev = build_condensation(rev)
    max_out = _propagate_over_reachable(cond_rev, max_lab, "max").T.astype(np.float32)
    return np.ascontiguousarray(min_in), np.ascontiguousarray(max_out)


def build_via_path_reach(g: TransmissionGraph, path: TransitivePath) -> ViaPathReachOracle:
    min_in, max_out = reach_arrays_for_paths(g, [path])
    return ViaPathReachOracle(path=path, min_in=min_in[0], max_out=max_out[0])


def query_via_path_reach(o: ViaPathReachOracle, s: int, t: int) -> bool:
    """True iff some path node q_i has s ~> q_i and q_i ~> t."""
    return bool(o.min_in[s] <= o.max_out[t])


# ---------------------------------------------------------------------------
# Leveled distance oracle
# ---------------------------------------------------------------------------

@dataclass
class ViaPathDistOracle:
    path: TransitivePath
    eps: float
    thresholds: np.ndarray   # (1+eps)^j for j = -1 .. ceil(log_{1+eps} n)
    min_in: np.ndarray       # [n x J] float32, non-increasing along j
    max_out: np.ndarray      # [n x J] float32, non-decreasing along j


def threshold_levels(eps: float, n: int) -> np.ndarray:
    """Hop budgets (1+eps)^j, j in {-1, ..., ceil(log_{1+eps} n)}."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    top = math.ceil(math.log(max(n, 2)) / math.log1p(eps))
    return np.power(1.0 + eps, np.arange(-1, top + 1, dtype=float))


def dist_arrays_for_paths(g: TransmissionGraph, paths: list[TransitivePath], eps: float):
    """Leveled MinIn/MaxOut for many paths, sharing the hop-distance runs.

    Returns (min_in [P x n x J], max_out [P x n x J], thresholds [J]).
    min_in[p][v][j] is the smallest index on path p reachable from v within
    (1+eps)^j hops; level j = -1 admits only the zero-hop case v on the path.
    """
    thr = threshold_levels(eps, g.n)
    n, nj = g.n, len(thr)
    p = len(paths)
    min_in = np.full((p, n, nj), np.inf, dtype=np.float32)
    max_out = np.full((p, n, nj), -np.inf, dtype=np.float32)
    if p == 0:
        return min_in, max_out, thr
    all_ids = np.concatenate([np.asarray(pa.node_ids, dtype=np.int64) for pa in paths])
    d_to = hop_rows(g, all_ids, "reverse")     # row k: d(., all_ids[k])
    d_from = hop_rows(g, all_ids, "forward")   # row k: d(all_ids[k], .)
    start = 0
    for pi, pa in enumerate(paths):
        length = len(pa.node_ids)
        dto = d_to[start:start + length]
        dfrom = d_from[start:start + length]
        start += length
        for j, budget in enumerate(thr):
            mask_in = dto <= budget
            any_in = mask_in.any(axis=0)
            first = mask_in.argmax(axis=0)
            min_in[pi, any_in, j] = first[any_in]
            mask_out = dfrom <= budget
            any_out = mask_out.any(axis=0)
            last = length - 1 - mask_out[::-1].argmax(axis=0)
            max_out[pi, any_out, j] = last[any_out]
    return min_in, max_out, thr


def build_via_path_dist(g: TransmissionGraph, path: TransitivePath, eps: float) -> ViaPathDistOracle:
    min_in, max_out, thr = dist_arrays_for_paths(g, [path], eps)
    return ViaPathDistOracle(path=path, eps=eps, thresholds=thr,
                             min_in=min_in[0], max_out=max_out[0])


def query_via_path_dist(o: ViaPathDistOracle, s: int, t: int) -> float:
    """Approximate length of the shortest s->t route through the path.

    Scans MinIn[s, .] and MaxOut[t, .] in opposite directions and returns the
    smallest feasible (1+eps)^j + (1+eps)^k + 1; inf when no pair (j, k) is
    feasible, which happens exactly when s cannot reach t via the path.
    """
    row_in = o.min_in[s]
    row_out = o.max_out[t]
    nj = len(o.thresholds)
    best = math.inf
    k = 0
    for j in range(nj - 1, -1, -1):
        while k < nj and row_out[k] < row_in[j]:
            k += 1
        if k == nj:
            break
        best = min(best, float(o.thresholds[j] + o.thresholds[k] + 1.0))
    return best


# ---------------------------------------------------------------------------
# Via-clique aggregation
# ---------------------------------------------------------------------------

@dataclass
class ViaCliqueOracle:
    """Per-clique bundle of via-path oracles; reach and/or dist mode."""

    paths: list[TransitivePath]
    reach_oracles: list[ViaPathReachOracle] | None = None
    dist_oracles: list[ViaPathDistOracle] | None = None

    def member_ids(self) -> set[int]:
        return {i for p in self.paths for i in p.node_ids}


def clique_paths(g: TransmissionGraph, members: list[TransmissionPoint],
                 stab_point: Point | None = None) -> list[TransitivePath]:
    """Transitive paths covering a clique; O(1) of them.

    With a stab point the clique splits into at most six cone paths; without
    one it is first partitioned into stabbed sub-cliques.
    """
    if stab_point is not None:
        return decompose_stabbed_clique(members, stab_point)
    paths = []
    for cand, group in stab_general_clique(members):
        paths.extend(decompose_stabbed_clique(group, cand))
    return paths


def build_via_clique_oracle(g: TransmissionGraph, members: list[TransmissionPoint],
                            mode: str = "reach", eps: float | None = None,
                            stab_point: Point | None = None) -> ViaCliqueOracle:
    paths = clique_paths(g, members, stab_point)
    oracle = ViaCliqueOracle(paths=paths)
    if mode not in ("reach", "dist"):
        raise ValueError(f"mode must be 'reach' or 'dist', got {mode!r}")
    if mode == "reach":
        mi, mo = reach_arrays_for_paths(g, paths)
        oracle.reach_oracles = [ViaPathReachOracle(p, mi[i], mo[i]) for i, p in enumerate(paths)]
    else:
        if eps is None:
            raise ValueError("dist mode needs eps")
        mi, mo, thr = dist_arrays_for_paths(g, paths, eps)
        oracle.dist_oracles = [ViaPathDistOracle(p, eps, thr, mi[i], mo[i])
                               for i, p in enumerate(paths)]
    return oracle


def query_via_clique(o: ViaCliqueOracle, s: int, t: int, mode: str = "reach"):
    """OR of the path reach answers, or min of the path distance answers."""
    if mode == "reach":
        if o.reach_oracles is None:
            raise ValueError("oracle was not built in reach mode")
        return any(query_via_path_reach(r, s, t) for r in o.reach_oracles)
    if mode == "dist":
        if o.dist_oracles is None:
            raise ValueError("oracle was not built in dist mode")
        return min((query_via_path_dist(d, s, t) for d in o.dist_oracles), default=math.inf)
    raise ValueError(f"mode must be 'reach' or 'dist', got {mode!r}")
