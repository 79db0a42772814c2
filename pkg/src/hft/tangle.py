"""Data model for a finite planar window of a homoclinic tangle.

Coordinates are exact :class:`fractions.Fraction` values.  Each manifold is
stored as two branch polylines starting at the fixed point; concatenating
the reversed negative branch with the positive branch gives one simple
polyline whose vertex ``j`` sits at signed parameter ``j - (len(neg) - 1)``.
A point on the manifold is addressed by a :class:`ManifoldParam`, whose
``value`` (branch sign times offset) is that signed parameter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

STABLE = "stable"
UNSTABLE = "unstable"
MANIFOLDS = (STABLE, UNSTABLE)
FIXED_POINT_ID = "x"


class TangleError(ValueError):
    """Malformed input or a query the stored data cannot answer."""


class WindowExceeded(TangleError):
    """A requested object reaches outside the stored window."""


class NonTransverseError(TangleError):
    """Tangency, collinear overlap or other degenerate contact."""


Point = tuple[Fraction, Fraction]


def parse_rational(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TangleError(f"malformed rational {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            if "/" in value:
                num, den = value.split("/")
                if int(den) == 0:
                    raise TangleError(f"zero denominator in {value!r}")
                return Fraction(int(num), int(den))
            return Fraction(int(value))
        except ValueError as exc:
            raise TangleError(f"malformed rational {value!r}") from exc
    raise TangleError(f"malformed rational {value!r}")


def format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def make_point(x, y) -> Point:
    return (parse_rational(x), parse_rational(y))


@dataclass(frozen=True, order=False)
class ManifoldParam:
    """Position on a manifold: branch sign and nonnegative polyline offset."""

    branch: int
    offset: Fraction

    def __post_init__(self):
        if self.branch not in (1, -1):
            raise TangleError(f"branch must be +1 or -1, got {self.branch}")
        if self.offset < 0:
            raise TangleError("negative offset")
        object.__setattr__(self, "offset", Fraction(self.offset))
        if self.offset == 0 and self.branch != 1:
            object.__setattr__(self, "branch", 1)

    @classmethod
    def from_value(cls, t: Fraction) -> "ManifoldParam":
        t = Fraction(t)
        return cls(1 if t >= 0 else -1, abs(t))

    @property
    def value(self) -> Fraction:
        return self.branch * self.offset

    def __lt__(self, other: "ManifoldParam") -> bool:
        return self.value < other.value

    def __le__(self, other: "ManifoldParam") -> bool:
        return self.value <= other.value

    def __str__(self) -> str:
        if self.offset == 0:
            return "0"
        return ("+" if self.branch > 0 else "-") + format_rational(self.offset)

    @classmethod
    def parse(cls, text: str) -> "ManifoldParam":
        if not isinstance(text, str) or not text:
            raise TangleError(f"malformed parameter {text!r}")
        if text == "0":
            return cls(1, Fraction(0))
        if text[0] not in "+-":
            raise TangleError(f"parameter needs a sign: {text!r}")
        off = parse_rational(text[1:])
        if off <= 0:
            raise TangleError(f"nonzero parameter expected after sign: {text!r}")
        return cls(1 if text[0] == "+" else -1, off)


@dataclass(frozen=True)
class ManifoldArc:
    """One invariant manifold: two branches through the fixed point.

    ``orientation`` is +1 when the manifold's reference orientation runs
    towards increasing parameter (from the negative into the positive
    branch) and -1 otherwise.
    """

    kind: str
    branch_pos: tuple[Point, ...]
    branch_neg: tuple[Point, ...]
    orientation: int = 1

    def __post_init__(self):
        if self.kind not in MANIFOLDS:
            raise TangleError(f"unknown manifold kind {self.kind!r}")
        if self.orientation not in (1, -1):
            raise TangleError("orientation must be +1 or -1")
        object.__setattr__(self, "branch_pos", tuple(make_point(*p) for p in self.branch_pos))
        object.__setattr__(self, "branch_neg", tuple(make_point(*p) for p in self.branch_neg))
        if len(self.branch_pos) < 2 or len(self.branch_neg) < 2:
            raise TangleError(f"{self.kind}: each branch needs at least two vertices")
        if self.branch_pos[0] != self.branch_neg[0]:
            raise TangleError(f"{self.kind}: branches must start at the same fixed point")

    @property
    def fixed_point(self) -> Point:
        return self.branch_pos[0]

    @cached_property
    def vertices(self) -> tuple[Point, ...]:
        """The whole manifold as one polyline, in increasing parameter."""
        return tuple(reversed(self.branch_neg)) + self.branch_pos[1:]

    @property
    def origin(self) -> int:
        """Index of the fixed point in :attr:`vertices`."""
        return len(self.branch_neg) - 1

    @property
    def t_min(self) -> Fraction:
        return Fraction(-(len(self.branch_neg) - 1))

    @property
    def t_max(self) -> Fraction:
        return Fraction(len(self.branch_pos) - 1)

    def edges(self) -> list[tuple[Point, Point]]:
        v = self.vertices
        return [(v[i], v[i + 1]) for i in range(len(v) - 1)]

    def edge_index(self, t: Fraction) -> int:
        """Index into :meth:`edges` of the edge containing parameter ``t``.

        Vertices belong to the edge that starts at them, except the last one.
        """
        j = int((t - self.t_min) // 1)
        return min(j, len(self.vertices) - 2)

    def resolve(self, t) -> Point:
        if isinstance(t, ManifoldParam):
            t = t.value
        t = Fraction(t)
        if t < self.t_min or t > self.t_max:
            raise WindowExceeded(f"{self.kind} parameter {t} outside stored window")
        j = self.edge_index(t)
        f = t - self.t_min - j
        a, b = self.vertices[j], self.vertices[j + 1]
        return (a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]))

    def direction_at(self, t: Fraction) -> tuple[Fraction, Fraction]:
        """Direction of increasing parameter on the edge containing ``t``."""
        a, b = self.edges()[self.edge_index(t)]
        return (b[0] - a[0], b[1] - a[1])

    def param_of_edge_point(self, j: int, f: Fraction) -> Fraction:
        return self.t_min + j + f

    def sub_polyline(self, t0: Fraction, t1: Fraction) -> list[Point]:
        """Vertices from parameter ``t0`` to ``t1`` (either direction)."""
        t0, t1 = Fraction(t0), Fraction(t1)
        for t in (t0, t1):
            if t < self.t_min or t > self.t_max:
                raise WindowExceeded(f"{self.kind} parameter {t} outside stored window")
        if t0 == t1:
            return [self.resolve(t0)]
        lo, hi = min(t0, t1), max(t0, t1)
        pts = [self.resolve(lo)]
        k = int(lo - self.t_min) + 1          # first integer vertex strictly after lo
        while self.t_min + k < hi:
            pts.append(self.vertices[k])
            k += 1
        pts.append(self.resolve(hi))
        return pts if t0 < t1 else pts[::-1]


@dataclass(frozen=True)
class HomoclinicPoint:
    id: str
    position: Point
    u_param: ManifoldParam
    s_param: ManifoldParam
    crossing_sign: int
    maslov: int | None = None
    is_fixed_point: bool = False


@dataclass(frozen=True)
class Issue:
    severity: str          # "error" | "warning"
    code: str
    message: str
    ids: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {"severity": self.severity, "code": self.code,
                "message": self.message, "ids": list(self.ids)}


@dataclass
class ValidationReport:
    issues: list[Issue] = field(default_factory=list)

    @property
    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "error"]

    @property
    def warnings(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def __bool__(self) -> bool:       # truthy when something was reported
        return bool(self.issues)

    def codes(self) -> set[str]:
        return {i.code for i in self.issues}

    def to_json(self) -> dict:
        return {"ok": self.ok, "issues": [i.to_json() for i in self.issues]}


class TangleDiagram:
    """Two manifolds through a fixed point plus their intersection records.

    Instances are treated as immutable; derived data (Maslov indices, lune
    verdicts) is memoised in :attr:`cache`.
    """

    def __init__(self, unstable: ManifoldArc, stable: ManifoldArc,
                 points: Sequence[HomoclinicPoint], metadata: dict | None = None):
        if unstable.kind != UNSTABLE or stable.kind != STABLE:
            raise TangleError("manifold kinds mixed up")
        if unstable.fixed_point != stable.fixed_point:
            raise TangleError("manifolds do not share the fixed point")
        self.unstable = unstable
        self.stable = stable
        self.points = tuple(points)
        self.metadata = dict(metadata or {})
        self.cache: dict = {}
        self._by_id = {}
        for p in self.points:
            if p.id in self._by_id:
                raise TangleError(f"duplicate point id {p.id!r}")
            self._by_id[p.id] = p

    # ------------------------------------------------------------------ access
    @property
    def fixed_point(self) -> Point:
        return self.unstable.fixed_point

    @property
    def ids(self) -> list[str]:
        return [p.id for p in self.points]

    def point(self, pid: str) -> HomoclinicPoint:
        try:
            return self._by_id[pid]
        except KeyError:
            raise TangleError(f"unknown point id {pid!r}") from None

    def __contains__(self, pid: str) -> bool:
        return pid in self._by_id

    @property
    def x(self) -> HomoclinicPoint:
        fx = [p for p in self.points if p.is_fixed_point]
        if len(fx) != 1:
            raise TangleError("diagram must contain exactly one fixed point record")
        return fx[0]

    def arc(self, manifold: str) -> ManifoldArc:
        if manifold == UNSTABLE:
            return self.unstable
        if manifold == STABLE:
            return self.stable
        raise TangleError(f"unknown manifold {manifold!r}")

    def param(self, pid: str, manifold: str) -> Fraction:
        p = self.point(pid)
        return (p.u_param if manifold == UNSTABLE else p.s_param).value

    @property
    def w_orientation(self) -> str:
        return self.metadata.get("w_orientation", "preserving")

    def with_points(self, points: Iterable[HomoclinicPoint]) -> "TangleDiagram":
        return TangleDiagram(self.unstable, self.stable, list(points), self.metadata)

    def relabel(self, mapping: dict[str, str]) -> "TangleDiagram":
        from dataclasses import replace
        pts = [replace(p, id=mapping.get(p.id, p.id)) for p in self.points]
        return self.with_points(pts)

    # ------------------------------------------------------------------ queries
    def segment(self, p: str, q: str, manifold: str) -> "Segment":
        """Sub-polyline ``[p, q]`` on ``manifold`` oriented from ``p`` to ``q``."""
        arc = self.arc(manifold)
        tp, tq = self.param(p, manifold), self.param(q, manifold)
        pts = arc.sub_polyline(tp, tq)
        if tp == tq:
            rel = 0
        else:
            rel = arc.orientation * (1 if tq > tp else -1)
        return Segment(tuple(pts), rel)

    def points_between(self, p: str, q: str, manifold: str) -> set[str]:
        """Homoclinic points strictly between ``p`` and ``q`` on ``manifold``."""
        tp, tq = self.param(p, manifold), self.param(q, manifold)
        lo, hi = min(tp, tq), max(tp, tq)
        return {r.id for r in self.points
                if lo < (r.u_param if manifold == UNSTABLE else r.s_param).value < hi}

    def order_along(self, manifold: str) -> list[str]:
        key = (lambda r: r.u_param.value) if manifold == UNSTABLE else (lambda r: r.s_param.value)
        return [r.id for r in sorted(self.points, key=key)]

    # ------------------------------------------------------------------ io
    def to_json(self) -> dict:
        def arc_json(a: ManifoldArc):
            return {
                "orientation": "+" if a.orientation > 0 else "-",
                "branch_pos": [[format_rational(c) for c in p] for p in a.branch_pos],
                "branch_neg": [[format_rational(c) for c in p] for p in a.branch_neg],
            }
        out = {
            "ambient": "plane",
            "fixed_point": [format_rational(c) for c in self.fixed_point],
            "unstable": arc_json(self.unstable),
            "stable": arc_json(self.stable),
            "points": [
                {"id": p.id, "u_param": str(p.u_param), "s_param": str(p.s_param),
                 "crossing_sign": p.crossing_sign}
                for p in self.points
            ],
        }
        if self.metadata:
            out["metadata"] = self.metadata
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"

    def __repr__(self) -> str:
        return (f"TangleDiagram({len(self.points)} points, "
                f"{len(self.unstable.vertices)}+{len(self.stable.vertices)} vertices)")


@dataclass(frozen=True)
class Segment:
    """A manifold segment ``[p, q]`` traversed from ``p`` to ``q``.

    ``relative_orientation`` is +1 if this direction agrees with the
    manifold's reference orientation, -1 if not, 0 for ``p == q``.
    """

    points: tuple[Point, ...]
    relative_orientation: int


def _arc_from_json(kind: str, data: dict, fixed: Point) -> ManifoldArc:
    if not isinstance(data, dict):
        raise TangleError(f"{kind}: expected an object")
    orient = data.get("orientation", "+")
    if orient not in ("+", "-"):
        raise TangleError(f"{kind}: orientation must be '+' or '-'")
    try:
        pos = [make_point(*p) for p in data["branch_pos"]]
        neg = [make_point(*p) for p in data["branch_neg"]]
    except KeyError as exc:
        raise TangleError(f"{kind}: missing {exc.args[0]}") from None
    except TypeError as exc:
        raise TangleError(f"{kind}: malformed point list") from exc
    for br in (pos, neg):
        if not br or br[0] != fixed:
            raise TangleError(f"{kind}: branch does not start at the fixed point")
    return ManifoldArc(kind, tuple(pos), tuple(neg), 1 if orient == "+" else -1)


def diagram_from_json(data: dict, *, verify: bool = True) -> TangleDiagram:
    """Parse the tangle file format and (re)compute the intersection records.

    Precomputed ``points`` are checked against the recomputation; any
    mismatch is a :class:`TangleError`.  Ids from the file are kept.
    """
    from .geometry import compute_intersections   # geometry depends on this module

    if not isinstance(data, dict):
        raise TangleError("tangle file must hold a JSON object")
    if data.get("ambient") != "plane":
        raise TangleError("ambient must be 'plane'")
    try:
        fixed = make_point(*data["fixed_point"])
    except (KeyError, TypeError) as exc:
        raise TangleError("missing or malformed fixed_point") from exc
    u = _arc_from_json(UNSTABLE, data.get("unstable"), fixed)
    s = _arc_from_json(STABLE, data.get("stable"), fixed)
    computed = compute_intersections(u, s)
    meta = data.get("metadata") or {}
    if "points" not in data:
        return TangleDiagram(u, s, computed, meta)

    given = data["points"]
    if not isinstance(given, list):
        raise TangleError("points must be a list")
    by_params = {(str(p.u_param), str(p.s_param)): p for p in computed}
    out = []
    seen = set()
    for rec in given:
        try:
            up = ManifoldParam.parse(rec["u_param"])
            sp = ManifoldParam.parse(rec["s_param"])
            pid = str(rec["id"])
            sign = int(rec["crossing_sign"])
        except (KeyError, TypeError) as exc:
            raise TangleError(f"malformed point record {rec!r}") from exc
        key = (str(up), str(sp))
        if key not in by_params:
            raise TangleError(f"point {pid!r} is not an intersection of the stored arcs")
        if key in seen:
            raise TangleError(f"duplicate point record at {key}")
        seen.add(key)
        cp = by_params[key]
        if cp.crossing_sign != sign:
            raise TangleError(f"point {pid!r}: crossing sign {sign} disagrees with geometry")
        from dataclasses import replace
        out.append(replace(cp, id=pid))
    if verify and len(out) != len(computed):
        missing = sorted(set(by_params) - seen)
        raise TangleError(f"points list misses {len(missing)} computed intersections")
    return TangleDiagram(u, s, out, meta)


def loads(text: str) -> TangleDiagram:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TangleError(f"invalid JSON: {exc}") from exc
    return diagram_from_json(data)


def load(path) -> TangleDiagram:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
