"""Exact planar computations on tangle diagrams.

Everything here runs on :class:`fractions.Fraction` coordinates.  Floats are
only used to bucket segments before the exact tests.

Maslov index.  The loop for ``(p, q)`` runs from ``p`` along ``[p, q]_u`` to
``q`` and back along ``[q, p]_s``.  We follow its tangent *line* and, at the
corners, rotate the line counter-clockwise from ``W^u`` to ``W^s`` at ``q``
and clockwise from ``W^s`` to ``W^u`` at ``p`` (each by less than a half
turn).  The net rotation is a multiple of a half turn; it is obtained exactly
by counting signed passes of the line through a generic reference line.

Lunes.  ``lune_exists`` tests the winding function of that same loop: for one
of the two traversal senses it must be nonnegative everywhere, and at both
corners the convex sector must carry 1 and the reflex sector 0.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from itertools import count
from typing import Iterable, Sequence

from .tangle import (
    FIXED_POINT_ID, STABLE, UNSTABLE, HomoclinicPoint, Issue, ManifoldArc,
    ManifoldParam, NonTransverseError, Point, TangleDiagram, TangleError,
    ValidationReport, WindowExceeded,
)

INTEGER = "z"
MOD2 = "z2"


class ConsistencyError(RuntimeError):
    """Two independent computations that must agree did not."""


class PreconditionError(TangleError):
    """A geometric query was asked outside its domain (e.g. wrong Maslov gap)."""


Vec = tuple[Fraction, Fraction]


def sub(a: Point, b: Point) -> Vec:
    return (a[0] - b[0], a[1] - b[1])


def cross(a: Vec, b: Vec) -> Fraction:
    return a[0] * b[1] - a[1] * b[0]


def dot(a: Vec, b: Vec) -> Fraction:
    return a[0] * b[0] + a[1] * b[1]


def neg(a: Vec) -> Vec:
    return (-a[0], -a[1])


def _sgn(x) -> int:
    return (x > 0) - (x < 0)


def in_ccw_sector(a: Vec, b: Vec, v: Vec) -> bool:
    """Whether ``v`` lies strictly inside the sector swept counter-clockwise from ``a`` to ``b``."""
    c = cross(a, b)
    if c > 0:
        return cross(a, v) > 0 and cross(v, b) > 0
    if c < 0:
        return not (cross(b, v) >= 0 and cross(v, a) >= 0)
    if dot(a, b) < 0:
        return cross(a, v) > 0
    raise NonTransverseError("degenerate sector")


# ---------------------------------------------------------------------------
# segment bucketing

def _candidate_pairs(edges_a, edges_b, same: bool = False):
    """Index pairs of edges whose bounding boxes overlap."""
    def bbox(e):
        (x0, y0), (x1, y1) = e
        return (float(min(x0, x1)), float(min(y0, y1)), float(max(x0, x1)), float(max(y0, y1)))

    ba = [bbox(e) for e in edges_a]
    bb = ba if same else [bbox(e) for e in edges_b]
    if not ba or not bb:
        return
    lengths = sorted(max(b[2] - b[0], b[3] - b[1]) for b in ba + bb)
    allb = ba + bb
    extent = max(max(b[2] for b in allb) - min(b[0] for b in allb),
                 max(b[3] for b in allb) - min(b[1] for b in allb))
    # median edge size, but never so fine that the grid has more cells than edges
    cell = max(lengths[len(lengths) // 2] * 2, extent / (2 * math.sqrt(len(allb))), 1e-12)
    grid = defaultdict(list)
    for j, b in enumerate(bb):
        for gx in range(math.floor(b[0] / cell), math.floor(b[2] / cell) + 1):
            for gy in range(math.floor(b[1] / cell), math.floor(b[3] / cell) + 1):
                grid[(gx, gy)].append(j)
    eps = 1e-9 * cell
    for i, b in enumerate(ba):
        seen = set()
        for gx in range(math.floor(b[0] / cell), math.floor(b[2] / cell) + 1):
            for gy in range(math.floor(b[1] / cell), math.floor(b[3] / cell) + 1):
                for j in grid.get((gx, gy), ()):
                    if j in seen or (same and j <= i):
                        continue
                    seen.add(j)
                    c = bb[j]
                    if b[0] <= c[2] + eps and c[0] <= b[2] + eps and b[1] <= c[3] + eps and c[1] <= b[3] + eps:
                        yield i, j


def _segment_contact(a: Point, b: Point, c: Point, d: Point):
    """Contact between segments ``ab`` and ``cd``.

    Returns ``None``, ``("cross", t, w, point)`` with ``t, w`` the fractions
    along each segment, or ``("overlap",)`` for a collinear overlap of
    positive length.
    """
    r = sub(b, a)
    s = sub(d, c)
    den = cross(r, s)
    ca = sub(c, a)
    if den == 0:
        if cross(ca, r) != 0:
            return None
        rr = dot(r, r)
        t0 = dot(ca, r) / rr
        t1 = dot(sub(d, a), r) / rr
        lo, hi = max(min(t0, t1), Fraction(0)), min(max(t0, t1), Fraction(1))
        if lo > hi:
            return None
        if lo < hi:
            return ("overlap",)
        pt = (a[0] + lo * r[0], a[1] + lo * r[1])
        w = Fraction(0) if pt == c else Fraction(1)
        return ("cross", lo, w, pt)
    t = cross(ca, s) / den
    w = cross(ca, r) / den
    if 0 <= t <= 1 and 0 <= w <= 1:
        return ("cross", t, w, (a[0] + t * r[0], a[1] + t * r[1]))
    return None


def _local_rays(arc: ManifoldArc, j: int, f: Fraction):
    """Incoming/outgoing directions of ``arc`` at edge ``j`` fraction ``f``.

    Returns ``(param, d_in, d_out)`` with ``d_in`` the direction of travel
    arriving at the point.  Raises at the ends of the stored polyline.
    """
    verts = arc.vertices
    if f == 1:
        j, f = j + 1, Fraction(0)
    t = arc.t_min + j + f
    if f == 0:
        if j == 0 or j == len(verts) - 1:
            raise NonTransverseError(f"{arc.kind}: contact at the end of the stored window")
        return t, sub(verts[j], verts[j - 1]), sub(verts[j + 1], verts[j])
    e = sub(verts[j + 1], verts[j])
    return t, e, e


def compute_intersections(unstable: ManifoldArc, stable: ManifoldArc) -> list[HomoclinicPoint]:
    """All transverse intersections of the two arcs, sorted along ``W^u``.

    The fixed point gets id ``x``; the others ``h0, h1, ...`` in that order.
    Tangencies and shared collinear pieces raise :class:`NonTransverseError`.
    """
    ue, se = unstable.edges(), stable.edges()
    found: dict[Point, tuple] = {}
    for i, j in _candidate_pairs(ue, se):
        hit = _segment_contact(ue[i][0], ue[i][1], se[j][0], se[j][1])
        if hit is None:
            continue
        if hit[0] == "overlap":
            raise NonTransverseError(f"collinear overlap between unstable edge {i} and stable edge {j}")
        _, t, w, pt = hit
        if pt not in found:
            found[pt] = (i, t, j, w)
    out = []
    for pt, (i, t, j, w) in found.items():
        tu, u_in, u_out = _local_rays(unstable, i, t)
        ts, s_in, s_out = _local_rays(stable, j, w)
        left = [in_ccw_sector(u_out, neg(u_in), v) for v in (s_out, neg(s_in))]
        for v in (s_out, neg(s_in)):
            for uu in (u_out, neg(u_in)):
                if cross(v, uu) == 0 and dot(v, uu) > 0:
                    raise NonTransverseError(f"manifolds share a direction at {_fmt(pt)}")
        if left[0] == left[1]:
            raise NonTransverseError(f"tangency at {_fmt(pt)} (unstable edge {i}, stable edge {j})")
        out.append((tu, ts, pt, 1 if left[0] else -1))
    out.sort(key=lambda r: r[0])
    fixed = unstable.fixed_point
    pts, k = [], 0
    for tu, ts, pt, sign in out:
        is_x = pt == fixed
        if is_x and (tu != 0 or ts != 0):
            raise TangleError("fixed point met away from parameter 0")
        pid = FIXED_POINT_ID if is_x else f"h{k}"
        if not is_x:
            k += 1
        pts.append(HomoclinicPoint(pid, pt, ManifoldParam.from_value(tu),
                                   ManifoldParam.from_value(ts), sign,
                                   0 if is_x else None, is_x))
    return pts


def _fmt(pt: Point) -> str:
    return f"({float(pt[0]):.6g}, {float(pt[1]):.6g})"


def polyline_self_contacts(vertices: Sequence[Point]) -> list[tuple[int, int]]:
    """Pairs of edges of an open polyline that touch illegitimately."""
    edges = [(vertices[i], vertices[i + 1]) for i in range(len(vertices) - 1)]
    bad = []
    for i, j in _candidate_pairs(edges, edges, same=True):
        hit = _segment_contact(edges[i][0], edges[i][1], edges[j][0], edges[j][1])
        if hit is None:
            continue
        if j == i + 1 and hit[0] == "cross" and hit[3] == edges[i][1]:
            continue
        bad.append((i, j))
    return bad


# ---------------------------------------------------------------------------
# loops

def _path(arc: ManifoldArc, t0: Fraction, t1: Fraction, breaks: Iterable[Fraction] = ()):
    """Vertices from ``t0`` to ``t1`` with extra vertices at ``breaks``.

    Returns ``(points, is_break)``.
    """
    lo, hi = min(t0, t1), max(t0, t1)
    if lo < arc.t_min or hi > arc.t_max:
        raise WindowExceeded(f"{arc.kind} segment leaves the stored window")
    ts = {lo, hi}
    k = math.floor(lo - arc.t_min) + 1
    while arc.t_min + k < hi:
        ts.add(arc.t_min + k)
        k += 1
    brk = {Fraction(b) for b in breaks if lo < b < hi}
    ts |= brk
    order = sorted(ts, reverse=t0 > t1)
    return [arc.resolve(t) for t in order], [t in brk for t in order]


@dataclass
class Loop:
    """Closed polygon ``[p, q]_u * [q, p]_s`` with marked corners and crossings."""

    vertices: list[Point]
    corner_p: int
    corner_q: int
    special: list[bool]          # corners and self-crossings

    @property
    def edges(self) -> list[tuple[Point, Point]]:
        v = self.vertices
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]


def build_loop(diagram: TangleDiagram, p: str, q: str, with_crossings: bool = False) -> Loop:
    tup, tuq = diagram.param(p, UNSTABLE), diagram.param(q, UNSTABLE)
    tsp, tsq = diagram.param(p, STABLE), diagram.param(q, STABLE)
    ub, sb = [], []
    if with_crossings:
        for c in (diagram.points_between(p, q, UNSTABLE) & diagram.points_between(p, q, STABLE)):
            ub.append(diagram.param(c, UNSTABLE))
            sb.append(diagram.param(c, STABLE))
    upts, ubrk = _path(diagram.unstable, tup, tuq, ub)
    spts, sbrk = _path(diagram.stable, tsq, tsp, sb)
    verts = upts + spts[1:-1]
    special = [True] + ubrk[1:-1] + [True] + sbrk[1:-1]
    return Loop(verts, 0, len(upts) - 1, special)


def _reference_direction(dirs: Sequence[Vec]) -> Vec:
    for k in count(1):
        d = (Fraction(1), Fraction(k, 7919))
        if all(cross(d, e) != 0 for e in dirs):
            return d
    raise AssertionError("unreachable")


def _line_passes(a: Vec, b: Vec, sense: int, d: Vec) -> int:
    """Signed passes through line ``d`` while rotating line ``a`` to line ``b``
    by less than a half turn in direction ``sense``."""
    c = cross(a, b)
    if c == 0:
        raise ConsistencyError("rotation between equal lines")
    bb = b if sense * c > 0 else neg(b)
    for v in (d, neg(d)):
        if sense > 0 and cross(a, v) > 0 and cross(v, bb) > 0:
            return 1
        if sense < 0 and cross(a, v) < 0 and cross(v, bb) < 0:
            return -1
    return 0


def loop_rotation(loop: Loop) -> int:
    """Net tangent-line rotation of the loop in half turns, with the corner rule."""
    v = loop.vertices
    n = len(v)
    dirs = [sub(v[(i + 1) % n], v[i]) for i in range(n)]
    if any(d == (0, 0) for d in dirs):
        raise ConsistencyError("degenerate loop edge")
    ref = _reference_direction(dirs)
    total = 0
    for i in range(n):
        e_prev, e_next = dirs[i - 1], dirs[i]
        if i == loop.corner_q:
            total += _line_passes(e_prev, e_next, +1, ref)
        elif i == loop.corner_p:
            total += _line_passes(e_prev, e_next, -1, ref)
        else:
            c = cross(e_prev, e_next)
            if c == 0:
                if dot(e_prev, e_next) < 0:
                    raise ConsistencyError("polyline reverses on itself")
                continue
            total += _line_passes(e_prev, e_next, _sgn(c), ref)
    return total


# ---------------------------------------------------------------------------
# Maslov index

def maslov_rel(diagram: TangleDiagram, p: str, q: str) -> int:
    """Relative Maslov index ``mu(p, q)``."""
    key = ("mu_rel", p, q)
    if key in diagram.cache:
        return diagram.cache[key]
    diagram.point(p)
    diagram.point(q)
    if p == q:
        val = 0
    else:
        val = loop_rotation(build_loop(diagram, p, q))
    diagram.cache[key] = val
    return val


def maslov_abs(diagram: TangleDiagram, p: str) -> int:
    """Grading ``mu(p) = mu(p, x)``."""
    key = ("mu", p)
    if key not in diagram.cache:
        diagram.cache[key] = maslov_rel(diagram, p, diagram.x.id)
    return diagram.cache[key]


def maslov_table(diagram: TangleDiagram) -> dict[str, int]:
    return {pid: maslov_abs(diagram, pid) for pid in diagram.ids}


def with_maslov(diagram: TangleDiagram) -> TangleDiagram:
    """Copy of the diagram whose point records carry their Maslov index."""
    from dataclasses import replace
    mu = maslov_table(diagram)
    d = diagram.with_points(replace(p, maslov=mu[p.id]) for p in diagram.points)
    d.cache.update(diagram.cache)
    return d


# ---------------------------------------------------------------------------
# winding numbers

def _ray_avoids(origin: Point, r: Vec, verts: Sequence[Point]) -> bool:
    for v in verts:
        w = sub(v, origin)
        if cross(r, w) == 0 and dot(r, w) > 0:
            return False
    return True


def ray_winding(edges: Sequence[tuple[Point, Point]], origin: Point, r: Vec,
                skip: Iterable[int] = ()) -> int:
    """Winding number just off ``origin`` in direction ``r``, by ray crossing."""
    skip = set(skip)
    w = 0
    for idx, (a, b) in enumerate(edges):
        if idx in skip:
            continue
        e = sub(b, a)
        den = cross(r, e)
        if den == 0:
            continue
        ao = sub(a, origin)
        t = cross(ao, e) / den
        s = cross(ao, r) / den
        if t > 0 and 0 < s < 1:
            w += 1 if den > 0 else -1
    return w


_SLOPES = [(0, 1)] + [(s * k, m) for m in (3, 5, 7, 11, 13) for k in (1, 2) for s in (1, -1)]


class _IntLoop:
    """The loop scaled to integer coordinates (midpoints stay integral)."""

    def __init__(self, loop: Loop):
        L = 2
        for v in loop.vertices:
            L = math.lcm(L, v[0].denominator, v[1].denominator)
        L *= 2
        self.loop = loop
        self.V = [(int(v[0] * L), int(v[1] * L)) for v in loop.vertices]
        n = len(self.V)
        self.E = [(self.V[i], self.V[(i + 1) % n]) for i in range(n)]

    def _avoids(self, P, r) -> bool:
        for v in self.V:
            wx, wy = v[0] - P[0], v[1] - P[1]
            if r[0] * wy - r[1] * wx == 0 and r[0] * wx + r[1] * wy > 0:
                return False
        return True

    def _wind(self, P, r, skip) -> int:
        w = 0
        rx, ry = r
        px, py = P
        for idx, (a, b) in enumerate(self.E):
            if idx in skip:
                continue
            ex, ey = b[0] - a[0], b[1] - a[1]
            den = rx * ey - ry * ex
            if den == 0:
                continue
            ax, ay = a[0] - px, a[1] - py
            tn = ax * ey - ay * ex
            sn = ax * ry - ay * rx
            if den > 0:
                if tn > 0 and 0 < sn < den:
                    w += 1
            elif tn < 0 and den < sn < 0:
                w -= 1
        return w

    def probe(self, P, base, tilt, skip) -> int:
        for k, m in _SLOPES:
            r = (m * base[0] + k * tilt[0], m * base[1] + k * tilt[1])
            if self._avoids(P, r):
                return self._wind(P, r, skip)
        raise ConsistencyError("no admissible probe ray")

    def arc_left(self, i: int) -> int:
        """Winding number just left of the midpoint of edge ``i``."""
        a, b = self.E[i]
        m = ((a[0] + b[0]) // 2, (a[1] + b[1]) // 2)
        e = (b[0] - a[0], b[1] - a[1])
        return self.probe(m, (-e[1], e[0]), e, {i})

    def corner(self, i: int) -> tuple[int, int]:
        """``(convex, reflex)`` sector windings at vertex ``i``."""
        n = len(self.V)
        c = self.V[i]
        pa, pb = self.V[i - 1], self.V[(i + 1) % n]
        a = (pa[0] - c[0], pa[1] - c[1])
        b = (pb[0] - c[0], pb[1] - c[1])
        skip = {(i - 1) % n, i}
        conv = self.probe(c, (a[0] + b[0], a[1] + b[1]), b, skip)
        refl = self.probe(c, (-a[0] - b[0], -a[1] - b[1]), b, skip)
        return conv, refl

    def specials(self) -> list[int]:
        return [i for i, f in enumerate(self.loop.special) if f]


@dataclass
class LoopSubdivision:
    """Winding data of a lune candidate loop (debug/oracle view).

    ``arc_windings`` holds ``(left, right)`` winding numbers next to each arc
    of the loop between corners and self-crossings; every bounded face of
    the loop touches some arc.  ``corner_p``/``corner_q`` hold
    ``(convex, reflex)`` sector values.
    """

    loop: Loop
    arc_windings: list[tuple[int, int]]
    corner_p: tuple[int, int]
    corner_q: tuple[int, int]

    @property
    def values(self) -> set[int]:
        return {w for pair in self.arc_windings for w in pair}

    def to_json(self) -> dict:
        return {"arcs": [list(a) for a in self.arc_windings],
                "corner_p": list(self.corner_p), "corner_q": list(self.corner_q),
                "vertices": len(self.loop.vertices)}


def loop_subdivision(diagram: TangleDiagram, p: str, q: str) -> LoopSubdivision:
    il = _IntLoop(build_loop(diagram, p, q, with_crossings=True))
    arcs = []
    for i in il.specials():
        wl = il.arc_left(i)
        arcs.append((wl, wl - 1))
    return LoopSubdivision(il.loop, arcs, il.corner(il.loop.corner_p), il.corner(il.loop.corner_q))


def winding_lune_criterion(sub_: LoopSubdivision) -> bool:
    for sense in (1, -1):
        if any(sense * w < 0 for w in sub_.values):
            continue
        if all((sense * cv, sense * rf) == (1, 0) for cv, rf in (sub_.corner_p, sub_.corner_q)):
            return True
    return False


def _lune_fast(diagram: TangleDiagram, p: str, q: str) -> bool:
    """Same verdict as the criterion on the full subdivision, with early exits."""
    il = _IntLoop(build_loop(diagram, p, q, with_crossings=True))
    cp = il.corner(il.loop.corner_p)
    sense = cp[0]
    if sense not in (1, -1) or cp[1] != 0:
        return False
    cq = il.corner(il.loop.corner_q)
    if cq != cp:
        return False
    for i in il.specials():
        wl = il.arc_left(i)
        if sense * wl < 0 or sense * (wl - 1) < 0:
            return False
    return True


def lune_exists(diagram: TangleDiagram, p: str, q: str) -> bool:
    """Whether an immersed di-gon from ``p`` to ``q`` exists.

    Requires ``mu(p) - mu(q) == 1``.
    """
    gap = maslov_abs(diagram, p) - maslov_abs(diagram, q)
    if gap != 1:
        raise PreconditionError(f"lune query needs Maslov gap 1, got mu({p})-mu({q})={gap}")
    key = ("lune", p, q)
    if key not in diagram.cache:
        diagram.cache[key] = _lune_fast(diagram, p, q)
    return diagram.cache[key]


# ---------------------------------------------------------------------------
# signs

def sign_n(diagram: TangleDiagram, p: str, q: str, orientation: int = 1,
           mode: str = INTEGER) -> int:
    """Coefficient ``n(p, q)``.

    ``orientation`` = +1 uses the unstable manifold's stored reference
    orientation as ``o_u``, -1 the opposite one.  In ``z2`` mode the value is
    ``|n| mod 2``.
    """
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    if mode not in (INTEGER, MOD2):
        raise ValueError(f"unknown coefficient mode {mode!r}")
    if mode == INTEGER and diagram.w_orientation != "preserving":
        raise PreconditionError("integer coefficients need a W-orientation preserving map; use z2")
    if not lune_exists(diagram, p, q):
        return 0
    if mode == MOD2:
        return 1
    return orientation * diagram.segment(p, q, UNSTABLE).relative_orientation


@dataclass
class SignTable:
    values: dict[tuple[str, str], int]
    mode: str
    orientation: int

    def __getitem__(self, key) -> int:
        return self.values.get(key, 0)

    def to_json(self) -> dict:
        return {"mode": self.mode, "orientation": "u+" if self.orientation > 0 else "u-",
                "signs": {f"{p},{q}": v for (p, q), v in sorted(self.values.items())}}


def _lune_chunk(args) -> list[bool]:
    diagram, pairs = args
    return [_lune_fast(diagram, p, q) for p, q in pairs]


def sign_table(diagram: TangleDiagram, ids: Iterable[str] | None = None,
               orientation: int = 1, mode: str = INTEGER, jobs: int = 1) -> SignTable:
    """Nonzero ``n(p, q)`` for all pairs in ``ids`` with Maslov gap 1.

    With ``jobs > 1`` the lune tests run in worker processes; the result is
    identical.
    """
    ids = list(diagram.ids if ids is None else ids)
    mu = {p: maslov_abs(diagram, p) for p in ids}
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        todo = [(p, q) for p in ids for q in ids
                if mu[p] - mu[q] == 1 and ("lune", p, q) not in diagram.cache]
        chunks = [todo[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(jobs) as ex:
            for chunk, res in zip(chunks, ex.map(_lune_chunk, [(diagram, c) for c in chunks])):
                for pair, v in zip(chunk, res):
                    diagram.cache[("lune",) + pair] = v
    vals = {}
    for p in ids:
        for q in ids:
            if mu[p] - mu[q] == 1:
                v = sign_n(diagram, p, q, orientation, mode)
                if v:
                    vals[(p, q)] = v
    return SignTable(vals, mode, orientation)


# ---------------------------------------------------------------------------
# hearts

def _chain(intervals: Iterable[tuple[Fraction, Fraction]]) -> tuple:
    """Canonical 1-chain on a parametrised curve from oriented intervals."""
    acc = defaultdict(int)
    for a, b in intervals:
        if a == b:
            continue
        s = 1 if b > a else -1
        acc[min(a, b)] += s
        acc[max(a, b)] -= s
    out, run = [], 0
    for t in sorted(acc):
        run += acc[t]
        out.append((t, run))
    # drop redundant breakpoints
    canon, last = [], 0
    for t, v in out:
        if v != last:
            canon.append((t, v))
            last = v
    return tuple(canon)


def heart_boundary(diagram: TangleDiagram, p: str, q: str, r: str) -> tuple:
    """Boundary 1-chain of the heart glued from the lunes ``(p,q)`` and ``(q,r)``.

    Two factorisations belong to the same heart iff these chains agree (an
    immersed polygon is determined by its boundary in the plane).
    """
    tu = {k: diagram.param(k, UNSTABLE) for k in (p, q, r)}
    ts = {k: diagram.param(k, STABLE) for k in (p, q, r)}
    return (_chain([(tu[p], tu[q]), (tu[q], tu[r])]),
            _chain([(ts[q], ts[p]), (ts[r], ts[q])]))


def heart_middles(diagram: TangleDiagram, p: str, r: str, candidates: Iterable[str] | None = None) -> list[str]:
    mu_p, mu_r = maslov_abs(diagram, p), maslov_abs(diagram, r)
    if mu_p - mu_r != 2:
        raise PreconditionError(f"heart query needs Maslov gap 2, got {mu_p - mu_r}")
    cands = diagram.ids if candidates is None else candidates
    return [q for q in cands
            if maslov_abs(diagram, q) == mu_p - 1
            and lune_exists(diagram, p, q) and lune_exists(diagram, q, r)]


def heart_groups(diagram: TangleDiagram, p: str, r: str,
                 candidates: Iterable[str] | None = None) -> list[list[str]]:
    """Middle points of the hearts from ``p`` to ``r``, grouped by heart (no checks)."""
    groups = defaultdict(list)
    for q in heart_middles(diagram, p, r, candidates):
        groups[heart_boundary(diagram, p, q, r)].append(q)
    return [sorted(g) for g in groups.values()]


def heart_factorizations(diagram: TangleDiagram, p: str, r: str,
                         candidates: Iterable[str] | None = None) -> set[frozenset[str]]:
    """Cutting-partner pairs ``{q_a, q_b}`` of the hearts from ``p`` to ``r``.

    ``candidates`` restricts the middle points searched (default: the whole
    diagram).  A factorisation without partner raises
    :class:`WindowExceeded`; more than two factorisations of one heart raise
    :class:`ConsistencyError`.
    """
    out = set()
    for qs in heart_groups(diagram, p, r, candidates):
        if len(qs) == 1:
            raise WindowExceeded(f"cutting partner of {qs[0]} for ({p},{r}) is outside the window")
        if len(qs) > 2:
            raise ConsistencyError(f"heart ({p},{r}) has {len(qs)} factorisations: {sorted(qs)}")
        out.add(frozenset(qs))
    return out


# ---------------------------------------------------------------------------
# classification

def classify_points(diagram: TangleDiagram) -> dict[str, dict]:
    """Primary / semiprimary flags for every point except the fixed point.

    In the plane every homoclinic point is contractible and every common point
    of the two open segments is a recorded homoclinic point, so both flags
    coincide here.
    """
    x = diagram.x.id
    out = {}
    for p in diagram.ids:
        if p == x:
            continue
        try:
            shared = diagram.points_between(p, x, STABLE) & diagram.points_between(p, x, UNSTABLE)
        except WindowExceeded:
            out[p] = {"primary": None, "semiprimary": None, "unclassifiable": True}
            continue
        contractible = shared           # all points are contractible in the plane
        out[p] = {"primary": not contractible, "semiprimary": not shared,
                  "unclassifiable": False, "witnesses": sorted(shared)}
    return out


def primary_points(diagram: TangleDiagram) -> list[str]:
    return [p for p, f in classify_points(diagram).items() if f["primary"]]


# ---------------------------------------------------------------------------
# validation

def is_strongly_intersecting(diagram: TangleDiagram) -> bool:
    combos = {(p.u_param.branch, p.s_param.branch) for p in diagram.points if not p.is_fixed_point}
    return len(combos) == 4


def validate_tangle(diagram: TangleDiagram) -> ValidationReport:
    """Check the standing assumptions; see :class:`ValidationReport`.

    Lack of strong intersection is only a warning.
    """
    rep = ValidationReport()
    err = lambda code, msg, ids=(): rep.issues.append(Issue("error", code, msg, tuple(ids)))
    for arc in (diagram.unstable, diagram.stable):
        v = arc.vertices
        for i in range(len(v) - 1):
            if v[i] == v[i + 1]:
                err("repeated-vertex", f"{arc.kind}: consecutive vertices {i},{i + 1} coincide")
        for i, j in polyline_self_contacts(v):
            err("self-intersection", f"{arc.kind}: edges {i} and {j} touch")
    if rep.errors:
        return rep

    try:
        computed = compute_intersections(diagram.unstable, diagram.stable)
    except NonTransverseError as exc:
        err("non-transverse", str(exc))
        return rep

    by_pos = defaultdict(list)
    for p in diagram.points:
        by_pos[p.position].append(p.id)
    for pos, ids in by_pos.items():
        if len(ids) > 1:
            err("duplicate-point", f"several records at {_fmt(pos)}", ids)
    for p in diagram.points:
        try:
            pu = diagram.unstable.resolve(p.u_param)
            ps = diagram.stable.resolve(p.s_param)
        except WindowExceeded as exc:
            err("bad-parameter", str(exc), [p.id])
            continue
        if pu != p.position or ps != p.position:
            err("parameter-mismatch", f"{p.id}: parameters do not resolve to its position", [p.id])
    fixed = [p for p in diagram.points if p.is_fixed_point]
    if len(fixed) != 1:
        err("fixed-point", f"expected one fixed-point record, found {len(fixed)}", [p.id for p in fixed])
    else:
        f = fixed[0]
        if f.u_param.offset != 0 or f.s_param.offset != 0 or f.position != diagram.fixed_point:
            err("fixed-point", "fixed point record not at parameter 0", [f.id])
        if f.maslov not in (None, 0):
            err("fixed-point", "fixed point must have Maslov index 0", [f.id])

    comp = {(c.u_param.value, c.s_param.value): c for c in computed}
    have = {(p.u_param.value, p.s_param.value): p for p in diagram.points}
    for key, c in comp.items():
        if key not in have:
            err("missing-point", f"intersection at {_fmt(c.position)} has no record")
        elif have[key].crossing_sign != c.crossing_sign:
            err("crossing-sign", f"{have[key].id}: wrong crossing sign", [have[key].id])
    for key, p in have.items():
        if key not in comp:
            err("extra-point", f"{p.id} is not an intersection of the arcs", [p.id])
    if not is_strongly_intersecting(diagram):
        rep.issues.append(Issue("warning", "not-strongly-intersecting",
                                "some branch of W^u misses some branch of W^s in this window"))
    return rep
