"""Area-preserving planar maps and numerically grown tangles.

The maps are of the form ``phi(x, y) = (y, -x + f(y))`` with a polynomial
``f`` with rational coefficients.  They have Jacobian determinant 1 and the
exact inverse ``(X, Y) -> (f(X) - Y, X)``.  The default ``f(y) = -3/4 - y^2``
is the area-preserving Henon map, whose hyperbolic fixed point
``(-3/2, -3/2)`` is rational.

Growth happens in floating point; the resulting polylines are snapped to
dyadic rationals and everything downstream runs exactly on the snapped data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .geometry import compute_intersections, polyline_self_contacts, validate_tangle
from .tangle import STABLE, UNSTABLE, ManifoldArc, Point, TangleDiagram, TangleError, parse_rational

HENON = "henon_area_preserving"
USER = "user_polynomial"


class DynamicsError(TangleError):
    """Bad map specification or failed growth."""


def _poly(coeffs, y):
    out = 0
    for c in reversed(coeffs):
        out = out * y + c
    return out


def _dpoly(coeffs, y):
    return _poly([k * c for k, c in enumerate(coeffs)][1:], y) if len(coeffs) > 1 else 0


@dataclass(frozen=True)
class MapSpec:
    """``phi(x, y) = (y, -x + f(y))`` with ``f = sum coeffs[k] y^k``.

    For the Henon family ``coeffs = (c, 0, -1)`` and the fixed point is found
    from ``c``; ``c + 1`` must be the square of a rational.
    """

    family: str = HENON
    coeffs: tuple[Fraction, ...] = (Fraction(-3, 4), Fraction(0), Fraction(-1))
    fixed_point: Point | None = None

    def __post_init__(self):
        co = tuple(parse_rational(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", co)
        if self.family not in (HENON, USER):
            raise DynamicsError(f"unknown map family {self.family!r}")
        fp = self.fixed_point
        if fp is None:
            if self.family != HENON:
                raise DynamicsError("user maps need an explicit fixed point")
            fp = _henon_fixed_point(co[0])
        fp = (parse_rational(fp[0]), parse_rational(fp[1]))
        object.__setattr__(self, "fixed_point", fp)
        if self.forward(fp) != fp:
            raise DynamicsError(f"{fp} is not a fixed point")
        if abs(self.trace) <= 2:
            raise DynamicsError("fixed point is not hyperbolic (|trace| <= 2)")

    @classmethod
    def henon(cls, c=Fraction(-3, 4)) -> "MapSpec":
        return cls(HENON, (parse_rational(c), Fraction(0), Fraction(-1)))

    def f(self, y):
        return _poly(self.coeffs, y)

    def forward(self, p):
        x, y = p
        return (y, -x + self.f(y))

    def inverse(self, p):
        X, Y = p
        return (self.f(X) - Y, X)

    def jacobian(self, p) -> tuple[tuple, tuple]:
        return ((0, 1), (-1, _dpoly(self.coeffs, p[1])))

    @property
    def linearization(self):
        return self.jacobian(self.fixed_point)

    @property
    def trace(self) -> Fraction:
        return Fraction(_dpoly(self.coeffs, self.fixed_point[1]))

    @property
    def eigenvalues(self) -> tuple[float, float]:
        """``(lambda_u, lambda_s)`` with ``|lambda_u| > 1``."""
        t = float(self.trace)
        r = math.sqrt(t * t - 4)
        a, b = (t + r) / 2, (t - r) / 2
        return (a, b) if abs(a) > 1 else (b, a)

    @property
    def w_orientation(self) -> str:
        return "preserving" if self.trace > 2 else "reversing"

    def eigenvector(self, lam: float) -> tuple[float, float]:
        # (J - lam) v = 0 with J = [[0, 1], [-1, t]]: v = (1, lam)
        n = math.hypot(1.0, lam)
        return (1.0 / n, lam / n)

    def to_json(self) -> dict:
        return {"family": self.family, "coeffs": [str(c) for c in self.coeffs],
                "fixed_point": [str(c) for c in self.fixed_point],
                "w_orientation": self.w_orientation}


def _henon_fixed_point(c: Fraction) -> Point:
    # x = y and x^2 + 2x - c = 0, hyperbolic root -1 - sqrt(1 + c)
    d = c + 1
    num, den = math.isqrt(d.numerator), math.isqrt(d.denominator)
    if d < 0 or num * num != d.numerator or den * den != d.denominator:
        raise DynamicsError("c + 1 must be the square of a rational for an exact fixed point")
    x = -1 - Fraction(num, den)
    return (x, x)


def apply_map(spec: MapSpec, p, n: int):
    """``phi^n(p)``; negative ``n`` uses the exact inverse."""
    step = spec.forward if n >= 0 else spec.inverse
    for _ in range(abs(n)):
        p = step(p)
    return p


# ---------------------------------------------------------------------------
# growth

@dataclass(frozen=True)
class GrowthParams:
    delta: float = 1e-4
    max_arc_length: float = 30.0
    max_points: int = 4000
    max_turn_deg: float = 10.0
    max_spacing: float = 0.02
    snap_bits: int = 40
    box: float = 3.0
    max_depth: int = 40

    def __post_init__(self):
        for name in ("delta", "max_arc_length", "max_points", "max_turn_deg", "max_spacing", "snap_bits", "box"):
            if getattr(self, name) <= 0:
                raise DynamicsError(f"{name} must be positive")
        if self.max_turn_deg >= 90:
            raise DynamicsError("turning bound must be below 90 degrees")

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _turn(a, b, c) -> float:
    u = (b[0] - a[0], b[1] - a[1])
    v = (c[0] - b[0], c[1] - b[1])
    return abs(math.degrees(math.atan2(u[0] * v[1] - u[1] * v[0], u[0] * v[0] + u[1] * v[1])))


def _grow_branch(step, origin, v, lam, params: GrowthParams) -> list[tuple[float, float]]:
    """Float polyline of one branch: the fundamental domain and its images."""
    x0 = (float(origin[0]), float(origin[1]))

    def seed(s):
        return (x0[0] + s * v[0], x0[1] + s * v[1])

    def image(s, n):
        p = seed(s)
        for _ in range(n):
            p = step(p)
        return p

    lo, hi = params.delta / abs(lam), params.delta
    pts = [x0]
    length = 0.0
    n = 0
    while True:
        # walk the fundamental domain at level n, bisecting where needed
        grid = [lo + (hi - lo) * k / 8 for k in range(9)]
        sa, pa = grid[0], image(grid[0], n)
        if n == 0:
            pts.append(pa)
        stack = [(s, None) for s in reversed(grid[1:])]
        while stack:
            sb, pb = stack.pop()
            if pb is None:
                pb = image(sb, n)
            a = pts[-1]
            prev = pts[-2] if len(pts) > 1 else None
            too_far = math.dist(a, pb) > params.max_spacing
            too_bent = prev is not None and _turn(prev, a, pb) > params.max_turn_deg
            if (too_far or too_bent) and (sb - sa) > hi * 2.0 ** -params.max_depth:
                sm = (sa + sb) / 2
                stack.append((sb, pb))
                stack.append((sm, None))
                continue
            if abs(pb[0] - x0[0]) > params.box or abs(pb[1] - x0[1]) > params.box \
                    or not all(math.isfinite(c) for c in pb):
                return pts
            length += math.dist(a, pb)
            pts.append(pb)
            sa = sb
            if length > params.max_arc_length or len(pts) >= params.max_points:
                return pts
        n += 1


def _valid_prefix(pts: tuple[Point, ...]) -> tuple[Point, ...]:
    """Longest prefix of a snapped branch that is a simple polyline.

    Chords of very thin folds can cross even though the true manifold does
    not; the window is cut back before the first such crossing.
    """
    while True:
        bad = polyline_self_contacts(pts)
        if not bad:
            return pts
        j = min(max(e) for e in bad)
        pts = pts[:max(j, 1) + 1] if j > 1 else pts[:2]


def _snap(pts, bits: int, origin: Point) -> tuple[Point, ...]:
    den = 1 << bits
    out = [origin]
    for p in pts[1:]:
        q = (Fraction(round(p[0] * den), den), Fraction(round(p[1] * den), den))
        if q != out[-1]:
            out.append(q)
    return tuple(out)


def grow_tangle(spec: MapSpec | None = None, params: GrowthParams | None = None) -> TangleDiagram:
    """Grow both manifolds of the fixed point, snap, and intersect exactly.

    The unstable reference orientation points along the unstable eigenvector
    with positive first coordinate (increasing parameter on the "+" branch).
    """
    spec = spec or MapSpec()
    params = params or GrowthParams()
    lu, ls = spec.eigenvalues
    vu, vs = spec.eigenvector(lu), spec.eigenvector(ls)
    fwd = lambda p: spec.forward(p)
    inv = lambda p: spec.inverse(p)
    x = spec.fixed_point
    branches = {}
    for kind, step, v, lam in ((UNSTABLE, fwd, vu, lu), (STABLE, inv, vs, 1 / ls)):
        for sign in (1, -1):
            w = (sign * v[0], sign * v[1])
            branches[(kind, sign)] = _snap(_grow_branch(step, x, w, lam, params), params.snap_bits, x)
    arcs = {}
    for kind in (UNSTABLE, STABLE):
        pos, neg = _valid_prefix(branches[(kind, 1)]), _valid_prefix(branches[(kind, -1)])
        while True:
            joined = tuple(reversed(neg)) + pos[1:]
            bad = polyline_self_contacts(joined)
            if not bad:
                break
            # drop the offending edge lying farther from the fixed point
            o = len(neg) - 1

            def depth(e):
                return (e - o, 1) if e >= o else (o - 1 - e, -1)

            k, side = max((depth(e) for e in min(bad, key=lambda pr: max(depth(pr[0])[0], depth(pr[1])[0]))),
                          key=lambda d: d[0])
            before = (len(pos), len(neg))
            if side > 0:
                pos = pos[:max(k, 1) + 1]
            else:
                neg = neg[:max(k, 1) + 1]
            if (len(pos), len(neg)) == before:
                raise DynamicsError(f"{kind} manifold touches itself next to the fixed point")
        arcs[kind] = ManifoldArc(kind, pos, neg)
    meta = {"ambient": "plane", "w_orientation": spec.w_orientation,
            "map": spec.to_json(), "growth": params.to_json()}
    probe = TangleDiagram(arcs[UNSTABLE], arcs[STABLE], [], meta)
    rep = validate_tangle(probe)
    structural = [i for i in rep.errors if i.code not in ("missing-point", "fixed-point")]
    if structural:
        raise DynamicsError("snapped manifolds invalid: " + "; ".join(i.message for i in structural[:3]))
    pts = compute_intersections(arcs[UNSTABLE], arcs[STABLE])
    if len(pts) < 2:
        raise DynamicsError("growth budget exhausted before any homoclinic point was found")
    return TangleDiagram(arcs[UNSTABLE], arcs[STABLE], pts, meta)


def match_image(diagram: TangleDiagram, spec: MapSpec, pid: str, tol: float = 2e-3,
                ratio: float = 0.25) -> str | None:
    """Id of the detected point matching ``phi(p)``, or ``None``.

    Snapped manifolds are only approximately invariant, so the image is
    matched numerically: the nearest point must lie within ``tol`` and be
    clearly closer than the runner-up (distance ratio below ``ratio``).
    """
    p = diagram.point(pid).position
    img = spec.forward((float(p[0]), float(p[1])))
    ds = sorted((math.dist(img, (float(q.position[0]), float(q.position[1]))), q.id)
                for q in diagram.points)
    if not ds or ds[0][0] > tol:
        return None
    if len(ds) > 1 and ds[0][0] > ratio * ds[1][0]:
        return None
    return ds[0][1]
