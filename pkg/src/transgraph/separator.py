"""Balanced clique-based separators for sets of disks in the plane.

The construction works in two steps.  Step 1 finds a 2-approximate smallest
k*-enclosing square H_0 of the disk centers, with k* = max(2, ceil(n/145)).
Scaling H_0 about its center by t in [1, 3] yields the boundary family
partial-H(t).  Step 2 groups every disk that some partial-H(t) can meet into
stabbed cliques, computes for each clique the interval I_C of scale factors
whose boundary meets it, and picks t* minimizing the total weight of cliques
whose interval covers it.  The separator is the set of selected cliques plus
the cliques of "large" disks; the remaining disks split into the part inside
H(t*) and the part outside, with no disk of one part intersecting a disk of
the other.

All Step-2 constants live in normalized units where the edge of H_0 is 2
(coordinates divided by half_edge(H_0)):

* ``LARGE_RADIUS = 1/8``: a disk of diameter >= 1/4 meeting H(3) contains a
  ball of radius 1/8 centered within 1/8 of H(3), so a grid of spacing 1/8
  (half-diagonal sqrt(2)/16 < 1/8) over the inflated H(3) stabs all of them
  with O(1) points.
* size class s, for 3 <= s <= s_max = ceil(log2(n)/2) + 2, holds disks with
  normalized radius in [2^-(s+1), 2^-s); the class grid has spacing
  2^-(s+1) * sqrt(2), whose half-diagonal is exactly the class's smallest
  radius, so the grid point nearest a disk's center stabs the disk.
* disks below class s_max become singleton cliques stabbed at their center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .geometry import Point, Square, TransmissionPoint

BALANCE_NUM = 144          # each part holds at most ceil(144 n / 145) disks
BALANCE_DEN = 145
LARGE_RADIUS = 0.125       # normalized radius threshold for "large" disks
LARGE_GRID = 0.125         # stabbing grid spacing for large disks

WeightFn = Callable[[int], float]


class BadKError(ValueError):
    """k outside 1..len(centers)."""


@dataclass(frozen=True)
class StabbedClique:
    """Disks sharing a common point; a clique of the intersection graph."""

    member_ids: tuple[int, ...]
    stab_point: Point


@dataclass(frozen=True)
class CrossingInterval:
    """Scale factors t in [1, 3] at which partial-H(t) meets a clique."""

    lo: float
    hi: float
    clique_ref: int
    weight: float


@dataclass
class CliqueSeparator:
    cliques: list[StabbedClique]
    part_a: list[int]          # disks inside H(t*)
    part_b: list[int]          # disks outside H(t*)
    h0: Square
    t_star: float

    def clique_count(self) -> int:
        return len(self.cliques)

    def weight(self, weight_fn: Optional[WeightFn] = None) -> float:
        fn = weight_fn or (lambda size: 1.0)
        return float(sum(fn(len(c.member_ids)) for c in self.cliques))


def balance_bound(n: int) -> int:
    return math.ceil(BALANCE_NUM * n / BALANCE_DEN)


# ---------------------------------------------------------------------------
# Step 1: 2-approximate smallest k-enclosing square
# ---------------------------------------------------------------------------

def _center_array(centers) -> np.ndarray:
    if centers and isinstance(centers[0], TransmissionPoint):
        return np.array([(p.pos.x, p.pos.y) for p in centers], dtype=float)
    return np.array([(p.x, p.y) for p in centers], dtype=float)


def centered_k_enclosing_square(centers, k: int, q: Point) -> Square:
    """Smallest square centered at q containing at least k of the centers.

    Its half edge is the k-th smallest Chebyshev distance from q, found by
    selection in O(n).
    """
    pts = _center_array(centers)
    if not 1 <= k <= len(pts):
        raise BadKError(f"k must be in 1..{len(pts)}, got {k}")
    cheb = np.maximum(np.abs(pts[:, 0] - q.x), np.abs(pts[:, 1] - q.y))
    kth = np.partition(cheb, k - 1)[k - 1]
    return Square(q, float(kth))


def approx_smallest_k_enclosing_square(centers, k: int) -> Square:
    """2-approximation of the smallest square enclosing k of the centers.

    Every input center is a candidate; the best centered square over all
    candidates has edge at most twice the optimum, because the optimal square
    contains at least one candidate.  Candidates are scored by their k-th
    smallest Chebyshev distance, either by a chunked all-pairs scan or by
    exact k-nearest-neighbor queries; the two give identical results.
    """
    pts = _center_array(centers)
    n = len(pts)
    if not 1 <= k <= n:
        raise BadKError(f"k must be in 1..{n}, got {k}")
    if n <= 2048:
        best_half = np.inf
        best_i = 0
        chunk = max(1, (1 << 21) // max(n, 1))
        for lo in range(0, n, chunk):
            hi = min(n, lo + chunk)
            cheb = np.maximum(np.abs(pts[lo:hi, None, 0] - pts[None, :, 0]),
                              np.abs(pts[lo:hi, None, 1] - pts[None, :, 1]))
            kth = np.partition(cheb, k - 1, axis=1)[:, k - 1]
            i = int(np.argmin(kth))
            if kth[i] < best_half:
                best_half = float(kth[i])
                best_i = lo + i
    else:
        tree = cKDTree(pts)
        dists, _ = tree.query(pts, k=k, p=np.inf)
        kth = dists if k == 1 else dists[:, k - 1]
        best_i = int(np.argmin(kth))
        best_half = float(kth[best_i])
    return Square(Point(float(pts[best_i, 0]), float(pts[best_i, 1])), best_half)


# ---------------------------------------------------------------------------
# Step 2: stabbed cliques, crossing intervals, t* selection
# ---------------------------------------------------------------------------

def _normalized(disks: list[TransmissionPoint], h0: Square):
    h = h0.half_edge
    cx = np.array([d.pos.x for d in disks], dtype=float)
    cy = np.array([d.pos.y for d in disks], dtype=float)
    r = np.array([d.radius for d in disks], dtype=float)
    return (cx - h0.center.x) / h, (cy - h0.center.y) / h, r / h


def _raw_crossing_bounds(cx, cy, r):
    """Per-disk [T1, T2] such that partial-H(t) meets the closed disk iff
    T1 <= t <= T2 (before clipping to [1, 3]).

    T2 is the containment threshold max(|cx|,|cy|) + r.  T1 solves
    dist(center, H(t)) = r: in the axis slab the distance is a - t, at the
    corner it is hypot(a - t, b - t), with a >= b the sorted absolute
    coordinates.
    """
    a = np.maximum(np.abs(cx), np.abs(cy))
    b = np.minimum(np.abs(cx), np.abs(cy))
    t2 = a + r
    slab = a - r >= b
    disc = np.maximum(2.0 * r * r - (a - b) ** 2, 0.0)
    t1 = np.where(slab, a - r, (a + b - np.sqrt(disc)) / 2.0)
    return t1, t2


def _size_classes(r: np.ndarray, s_max: int) -> np.ndarray:
    """Class index per disk: r in [2^-(s+1), 2^-s).  Values above s_max mean
    "singleton"; callers mask out large disks (r >= 1/8) beforehand."""
    with np.errstate(divide="ignore"):
        s = np.ceil(-np.log2(np.maximum(r, 1e-300))).astype(np.int64) - 1
    # one exact correction step against log2 rounding at class boundaries
    s += r < np.exp2(-(s + 1).astype(float))
    s -= r >= np.exp2(-s.astype(float))
    return s


def _group_by_key(order_keys: list[tuple], ids: np.ndarray) -> dict:
    groups: dict[tuple, list[int]] = {}
    for key, i in zip(order_keys, ids.tolist()):
        groups.setdefault(key, []).append(i)
    return groups


def _stab_cliques(disks: list[TransmissionPoint], h0: Square):
    """Partition every disk that any partial-H(t) can meet into stabbed cliques.

    Returns (large_cliques, candidate_cliques): large disks go to the
    separator unconditionally, candidates are selected by their crossing
    interval.
    """
    n = len(disks)
    ids = np.array([d.id for d in disks], dtype=np.int64)
    cx, cy, r = _normalized(disks, h0)
    h = h0.half_edge

    # large: diameter >= 1/4 (normalized r >= 1/8) and meets the solid H(3)
    d3x = np.maximum(np.abs(cx) - 3.0, 0.0)
    d3y = np.maximum(np.abs(cy) - 3.0, 0.0)
    meets_h3 = d3x * d3x + d3y * d3y <= r * r
    large = (r >= LARGE_RADIUS) & meets_h3

    t1, t2 = _raw_crossing_bounds(cx, cy, r)
    crossing = (t1 <= 3.0) & (t2 >= 1.0)
    candidate = crossing & ~large

    def world(px: float, py: float) -> Point:
        return Point(h0.center.x + px * h, h0.center.y + py * h)

    large_cliques: list[StabbedClique] = []
    if large.any():
        li = np.nonzero(large)[0]
        # move each center toward H(3) until its inner 1/8-ball sits within
        # 1/8 of H(3), then snap to the stabbing grid
        zx = np.clip(cx[li], -3.0, 3.0)
        zy = np.clip(cy[li], -3.0, 3.0)
        vx, vy = zx - cx[li], zy - cy[li]
        dist = np.hypot(vx, vy)
        shift = np.maximum(dist - LARGE_RADIUS, 0.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            scale = np.where(dist > 0, shift / np.where(dist > 0, dist, 1.0), 0.0)
        wx = cx[li] + vx * scale
        wy = cy[li] + vy * scale
        kx = np.rint(wx / LARGE_GRID).astype(np.int64)
        ky = np.rint(wy / LARGE_GRID).astype(np.int64)
        for (gx, gy), members in sorted(_group_by_key(list(zip(kx.tolist(), ky.tolist())), ids[li]).items()):
            large_cliques.append(StabbedClique(tuple(members), world(gx * LARGE_GRID, gy * LARGE_GRID)))

    candidate_cliques: list[StabbedClique] = []
    if candidate.any():
        ci = np.nonzero(candidate)[0]
        s_max = math.ceil(math.log2(max(n, 2)) / 2) + 2
        s = _size_classes(r[ci], s_max)
        classed = np.nonzero(s <= s_max)[0]
        if classed.size:
            keys = []
            for j in classed.tolist():
                g = (2.0 ** (-float(s[j]) - 1.0)) * math.sqrt(2.0)
                keys.append((int(s[j]), int(round(cx[ci[j]] / g)), int(round(cy[ci[j]] / g))))
            for (sc, gx, gy), members in sorted(_group_by_key(keys, ids[ci[classed]]).items()):
                g = (2.0 ** (-float(sc) - 1.0)) * math.sqrt(2.0)
                candidate_cliques.append(StabbedClique(tuple(members), world(gx * g, gy * g)))
        for j in np.nonzero(s > s_max)[0].tolist():
            candidate_cliques.append(StabbedClique((int(ids[ci[j]]),), disks[int(ci[j])].pos))
    return large_cliques, candidate_cliques


def build_candidate_cliques(disks: list[TransmissionPoint], h0: Square) -> list[StabbedClique]:
    """All stabbed cliques over disks that the boundary family can meet."""
    large, candidates = _stab_cliques(disks, h0)
    return large + candidates


def clique_interval(c: StabbedClique, disks: list[TransmissionPoint], h0: Square,
                    clique_ref: int = 0, weight: float = 1.0) -> Optional[CrossingInterval]:
    """Hull of the members' crossing intervals, clipped to [1, 3].

    Returns None when no boundary partial-H(t), t in [1, 3], meets the clique.
    The hull (rather than a union of pieces) can only add the clique to the
    separator for extra t values, never miss a crossing.
    """
    by_id = {d.id: d for d in disks}
    members = [by_id[i] for i in c.member_ids]
    cx, cy, r = _normalized(members, h0)
    t1, t2 = _raw_crossing_bounds(cx, cy, r)
    lo, hi = float(t1.min()), float(t2.max())
    if hi < 1.0 or lo > 3.0:
        return None
    return CrossingInterval(max(lo, 1.0), min(hi, 3.0), clique_ref, weight)


def select_t_star(intervals: list[CrossingInterval]) -> tuple[float, float]:
    """t* in [1, 3] minimizing the total weight of intervals containing it.

    Sweeps the sorted interval endpoints; candidate optima are t = 1, every
    endpoint, and the midpoint of every gap between consecutive endpoints.
    Ties break toward the smallest t*.  Returns (t_star, weight).
    """
    if not intervals:
        return 1.0, 0.0
    los = np.array([iv.lo for iv in intervals])
    his = np.array([iv.hi for iv in intervals])
    ws = np.array([iv.weight for iv in intervals])

    lo_order = np.argsort(los, kind="stable")
    hi_order = np.argsort(his, kind="stable")
    lo_sorted, lo_cum = los[lo_order], np.concatenate(([0.0], np.cumsum(ws[lo_order])))
    hi_sorted, hi_cum = his[hi_order], np.concatenate(([0.0], np.cumsum(ws[hi_order])))

    # candidate optima: t = 1, every endpoint, and the midpoint of every gap
    events = np.unique(np.concatenate((los, his)))
    mids = (events[:-1] + events[1:]) / 2.0 if len(events) > 1 else np.empty(0)
    tail = np.array([min((events[-1] + 3.0) / 2.0, 3.0)])
    cand_t = np.concatenate(([1.0], events, mids, tail))
    started = lo_cum[np.searchsorted(lo_sorted, cand_t, side="right")]
    ended_before = hi_cum[np.searchsorted(hi_sorted, cand_t, side="left")]
    cand_w = started - ended_before
    best = np.lexsort((cand_t, cand_w))[0]
    return float(cand_t[best]), float(cand_w[best])


# ---------------------------------------------------------------------------
# Separator assembly
# ---------------------------------------------------------------------------

def _coverage_fallback(disks: list[TransmissionPoint]) -> CliqueSeparator:
    """One stabbed clique at the center contained in the most disks.

    Used when H_0 degenerates to edge 0 (>= k* coincident centers) or when no
    clique crosses and one side of the split would keep every disk.  Removal
    of the clique always makes progress; the remainder goes to part A.
    """
    n = len(disks)
    xs = np.array([d.pos.x for d in disks])
    ys = np.array([d.pos.y for d in disks])
    rs = np.array([d.radius for d in disks])
    best_i, best_cover = 0, -1
    chunk = max(1, (1 << 21) // max(n, 1))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        dx = xs[None, :] - xs[lo:hi, None]
        dy = ys[None, :] - ys[lo:hi, None]
        cover = (dx * dx + dy * dy <= rs[None, :] ** 2).sum(axis=1)
        i = int(np.argmax(cover))
        if cover[i] > best_cover:
            best_cover = int(cover[i])
            best_i = lo + i
    center = disks[best_i].pos
    members = [d.id for d in disks
               if (d.pos.x - center.x) ** 2 + (d.pos.y - center.y) ** 2 <= d.radius ** 2]
    member_set = set(members)
    rest = [d.id for d in disks if d.id not in member_set]
    clique = StabbedClique(tuple(sorted(members)), center)
    sep = CliqueSeparator(cliques=[clique], part_a=rest, part_b=[],
                          h0=Square(center, 0.0), t_star=1.0)
    _check_separator(sep, n)
    return sep


def _check_separator(sep: CliqueSeparator, n: int) -> None:
    in_cliques = sum(len(c.member_ids) for c in sep.cliques)
    total = in_cliques + len(sep.part_a) + len(sep.part_b)
    assert total == n, f"separator does not partition the disks ({total} != {n})"
    bound = balance_bound(n)
    assert len(sep.part_a) <= bound and len(sep.part_b) <= bound, (
        f"balance violated: |A|={len(sep.part_a)}, |B|={len(sep.part_b)}, bound={bound}")
    assert len(sep.part_a) < n and len(sep.part_b) < n, "separator made no progress"


def build_separator(disks: list[TransmissionPoint],
                    weight_fn: Optional[WeightFn] = None) -> CliqueSeparator:
    """Balanced clique-based separator for the disks' intersection graph.

    No disk of part A intersects any disk of part B, each part holds at most
    ceil(144 n / 145) disks, and every clique is stabbed by a single point.
    ``weight_fn`` scores a clique by its size during t* selection; the
    default counts each clique as 1.
    """
    n = len(disks)
    if n < 2:
        raise ValueError("build_separator needs at least 2 disks")
    fn = weight_fn or (lambda size: 1.0)
    k_star = max(2, math.ceil(n / BALANCE_DEN))
    centers = [d.pos for d in disks]
    h0 = approx_smallest_k_enclosing_square(centers, k_star)
    if h0.half_edge == 0.0:
        return _coverage_fallback(disks)

    large, candidates = _stab_cliques(disks, h0)
    intervals = []
    for idx, c in enumerate(candidates):
        iv = clique_interval(c, disks, h0, clique_ref=idx, weight=fn(len(c.member_ids)))
        assert iv is not None, "candidate clique lost its crossing interval"
        intervals.append(iv)
    t_star, _ = select_t_star(intervals)

    selected = [c for iv, c in zip(intervals, candidates) if iv.lo <= t_star <= iv.hi]
    cliques = large + selected
    in_cliques = {i for c in cliques for i in c.member_ids}

    h = h0.half_edge
    part_a, part_b = [], []
    for d in disks:
        if d.id in in_cliques:
            continue
        m_inf = max(abs(d.pos.x - h0.center.x), abs(d.pos.y - h0.center.y)) / h
        (part_a if m_inf < t_star else part_b).append(d.id)

    if not cliques and (len(part_a) == n or len(part_b) == n):
        return _coverage_fallback(disks)

    sep = CliqueSeparator(cliques=cliques, part_a=part_a, part_b=part_b,
                          h0=h0, t_star=t_star)
    _check_separator(sep, n)
    return sep


def separator_levels(disks: list[TransmissionPoint], base_cutoff: int = 64,
                     weight_fn: Optional[WeightFn] = None) -> list[dict]:
    """Per-level separator statistics for the full recursion (preorder)."""
    records: list[dict] = []

    def walk(pts: list[TransmissionPoint], depth: int) -> None:
        if len(pts) <= base_cutoff:
            records.append({"depth": depth, "n": len(pts), "cliques": 0,
                            "weight": 0.0, "size_a": 0, "size_b": 0, "leaf": True})
            return
        local = [TransmissionPoint(i, p.pos, p.radius) for i, p in enumerate(pts)]
        sep = build_separator(local, weight_fn)
        records.append({"depth": depth, "n": len(pts), "cliques": sep.clique_count(),
                        "weight": sep.weight(weight_fn), "size_a": len(sep.part_a),
                        "size_b": len(sep.part_b), "leaf": False})
        for part in (sep.part_a, sep.part_b):
            if part:
                walk([pts[i] for i in part], depth + 1)

    walk(list(disks), 0)
    return records
