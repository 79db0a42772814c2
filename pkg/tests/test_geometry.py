import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from hft import geometry as g
from hft.fixtures import BUILTIN_NAMES, builtin_example, meander, BELOW, ABOVE
from hft.tangle import STABLE, UNSTABLE, ManifoldArc, TangleDiagram, TangleError, WindowExceeded

FIXTURES = {name: builtin_example(name) for name in BUILTIN_NAMES}


def gap1_pairs(d):
    mu = g.maslov_table(d)
    return [(p, q) for p in d.ids for q in d.ids if mu[p] - mu[q] == 1]


# ---------------------------------------------------------------- oracles

def turning_oracle(d, p, q) -> int:
    """Tangent-line rotation of the loop in half turns, by floating-point angles."""
    up = list(d.segment(p, q, UNSTABLE).points)
    sp = list(d.segment(q, p, STABLE).points)
    verts = [(float(a), float(b)) for a, b in up + sp[1:-1]]
    n = len(verts)
    dirs = [(verts[(i + 1) % n][0] - verts[i][0], verts[(i + 1) % n][1] - verts[i][1]) for i in range(n)]
    corner_q = len(up) - 1
    total = 0.0
    for i in range(n):
        a, b = dirs[i - 1], dirs[i]
        ang = math.atan2(a[0] * b[1] - a[1] * b[0], a[0] * b[0] + a[1] * b[1])
        if i == corner_q:
            total += ang % math.pi                  # line turns ccw
        elif i == 0:
            total -= (-ang) % math.pi               # line turns cw
        else:
            total += ang
    k = total / math.pi
    assert abs(k - round(k)) < 1e-9
    return round(k)


def winding(poly, pt) -> int:
    w = 0
    x, y = pt
    for (x0, y0), (x1, y1) in zip(poly, poly[1:] + poly[:1]):
        if y0 <= y < y1 and (x1 - x0) * (y - y0) - (x - x0) * (y1 - y0) > 0:
            w += 1
        elif y1 <= y < y0 and (x1 - x0) * (y - y0) - (x - x0) * (y1 - y0) < 0:
            w -= 1
    return w


def lune_oracle(d, p, q) -> bool:
    """Grid-sampled winding oracle for rectilinear meanders.

    All fixture coordinates are multiples of 1/2, so the points at odd
    multiples of 1/4 meet every face of the loop.
    """
    up = list(d.segment(p, q, UNSTABLE).points)
    sp = list(d.segment(q, p, STABLE).points)
    poly = up + sp[1:-1]
    xs = [v[0] for v in poly]
    ys = [v[1] for v in poly]
    q4 = Fraction(1, 4)
    samples = [(Fraction(2 * i + 1, 4), Fraction(2 * j + 1, 4))
               for i in range(int(min(xs) * 2) - 1, int(max(xs) * 2) + 1)
               for j in range(int(min(ys) * 2) - 1, int(max(ys) * 2) + 1)]
    ws = {winding(poly, s) for s in samples}

    def corners(idx):
        c = poly[idx]
        a = poly[idx - 1]
        b = poly[(idx + 1) % len(poly)]
        da = (_sgn(a[0] - c[0]), _sgn(a[1] - c[1]))
        db = (_sgn(b[0] - c[0]), _sgn(b[1] - c[1]))
        inside = (c[0] + q4 * (da[0] + db[0]), c[1] + q4 * (da[1] + db[1]))
        outside = (c[0] - q4 * (da[0] + db[0]), c[1] - q4 * (da[1] + db[1]))
        return winding(poly, inside), winding(poly, outside)

    cp, cq = corners(0), corners(len(up) - 1)
    for sense in (1, -1):
        if all(sense * w >= 0 for w in ws) and cp == cq == (sense, 0):
            return True
    return False


def _sgn(v):
    return (v > 0) - (v < 0)


# ---------------------------------------------------------------- intersections

def F(*xs):
    return tuple(Fraction(x) for x in xs)


def test_single_crossing():
    o = F(0, 0)
    u = ManifoldArc(UNSTABLE, (o, F(4, 0)), (o, F(-4, 0)))
    s = ManifoldArc(STABLE, (o, F(0, 1), F(2, 1), F(2, -1)), (o, F(0, -2)))
    pts = g.compute_intersections(u, s)
    others = [p for p in pts if not p.is_fixed_point]
    assert len(others) == 1
    assert others[0].position == F(2, 0)
    assert others[0].crossing_sign == -1      # det((1,0),(0,-1))


def test_fig3b_left_points():
    d = FIXTURES["fig3b_left"]
    assert {"x", "p", "q_a", "q_b", "r"} <= set(d.ids)
    assert set(d.ids) - {"x", "p", "q_a", "q_b", "r"} == {"A", "B", "C"}


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_intersections_invariant_under_refinement(name):
    d = FIXTURES[name]

    def refine(br):
        out = [br[0]]
        for a, b in zip(br, br[1:]):
            out += [((a[0] + b[0]) / 2, (a[1] + b[1]) / 2), b]
        return tuple(out)

    u2 = ManifoldArc(UNSTABLE, refine(d.unstable.branch_pos), refine(d.unstable.branch_neg))
    s2 = ManifoldArc(STABLE, refine(d.stable.branch_pos), refine(d.stable.branch_neg))
    a = {(p.position, p.crossing_sign) for p in d.points}
    b = {(p.position, p.crossing_sign) for p in g.compute_intersections(u2, s2)}
    assert a == b


def test_polyline_self_contacts():
    sq = [F(0, 0), F(2, 0), F(2, 2), F(1, 2), F(1, -1)]
    assert g.polyline_self_contacts(sq)
    assert not g.polyline_self_contacts([F(0, 0), F(1, 0), F(1, 1), F(0, 1)])


# ---------------------------------------------------------------- Maslov

@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_maslov_additive_and_matches_turning_oracle(name):
    d = FIXTURES[name]
    mu = g.maslov_table(d)
    assert mu["x"] == 0 and g.maslov_rel(d, "x", "x") == 0
    for p, q in itertools.permutations(d.ids, 2):
        rel = g.maslov_rel(d, p, q)
        assert rel == mu[p] - mu[q]
        assert rel == turning_oracle(d, p, q)


def test_maslov_fig3b_left():
    d = FIXTURES["fig3b_left"]
    mu = g.maslov_table(d)
    assert mu["p"] - mu["q_a"] == 1 == mu["q_a"] - mu["r"]
    assert mu["q_a"] == mu["q_b"]


# ---------------------------------------------------------------- lunes

@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_lune_matches_grid_oracle_and_subdivision(name):
    d = FIXTURES[name]
    for p, q in gap1_pairs(d):
        fast = g.lune_exists(d, p, q)
        assert fast == g.winding_lune_criterion(g.loop_subdivision(d, p, q))
        assert fast == lune_oracle(d, p, q), (p, q)


def test_lune_precondition():
    d = FIXTURES["fig3b_left"]
    assert g.lune_exists(d, "p", "q_a")
    with pytest.raises(g.PreconditionError):
        g.lune_exists(d, "p", "r")
    with pytest.raises(g.PreconditionError):
        g.lune_exists(d, "q_a", "p")


def test_mixed_sign_loop_is_not_a_lune():
    found = False
    for d in FIXTURES.values():
        for p, q in gap1_pairs(d):
            sub = g.loop_subdivision(d, p, q)
            if any(w > 0 for w in sub.values) and any(w < 0 for w in sub.values):
                assert not g.lune_exists(d, p, q)
                found = True
    assert found


def test_embedded_case():
    # loops whose windings stay in {0, 1} or {0, -1}: lune iff both corners convex
    for d in FIXTURES.values():
        for p, q in gap1_pairs(d):
            sub = g.loop_subdivision(d, p, q)
            for s in (1, -1):
                if sub.values <= {0, s}:
                    convex = sub.corner_p == sub.corner_q == (s, 0)
                    assert g.lune_exists(d, p, q) == convex


# ---------------------------------------------------------------- signs

def test_signs_fig3b_left():
    d = FIXTURES["fig3b_left"]
    assert g.sign_n(d, "p", "q_a") == -1
    assert g.sign_n(d, "p", "q_b") == 1
    assert g.sign_n(d, "q_a", "r") == 1 == g.sign_n(d, "q_b", "r")
    assert g.sign_n(d, "p", "q_a", mode=g.MOD2) == 1


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_sign_table_properties(name):
    d = FIXTURES[name]
    mu = g.maslov_table(d)
    plus = g.sign_table(d)
    minus = g.sign_table(d, orientation=-1)
    mod2 = g.sign_table(d, mode=g.MOD2)
    assert {k: -v for k, v in plus.values.items()} == minus.values
    assert {k: abs(v) % 2 for k, v in plus.values.items()} == mod2.values
    for (p, q), v in plus.values.items():
        assert v in (1, -1) and mu[p] - mu[q] == 1


def test_no_lune_gives_zero():
    d = FIXTURES["fig3b_left"]
    zeros = [(p, q) for p, q in gap1_pairs(d) if not g.lune_exists(d, p, q)]
    assert zeros
    assert all(g.sign_n(d, p, q) == 0 for p, q in zeros)


def test_integer_mode_needs_orientation_preserving():
    d = FIXTURES["fig3b_left"]
    rev = TangleDiagram(d.unstable, d.stable, d.points, {**d.metadata, "w_orientation": "reversing"})
    with pytest.raises(g.PreconditionError):
        g.sign_n(rev, "p", "q_a")
    assert g.sign_n(rev, "p", "q_a", mode=g.MOD2) == 1


def test_parallel_sign_table_matches():
    d = FIXTURES["fig4"]
    d2 = builtin_example("fig4")
    assert g.sign_table(d).values == g.sign_table(d2, jobs=2).values


# ---------------------------------------------------------------- hearts

def test_hearts_fig3b():
    for name in ("fig3b_left", "fig3b_right"):
        d = FIXTURES[name]
        assert g.heart_factorizations(d, "p", "r") == {frozenset({"q_a", "q_b"})}


def test_hearts_fig5_shared_partners():
    d = FIXTURES["fig5"]
    pair = frozenset({"q_a", "q_b"})
    assert pair in g.heart_factorizations(d, "p", "r")
    assert pair in g.heart_factorizations(d, "p", "r2")


def test_heart_without_middles_is_empty():
    d = FIXTURES["fig3b_left"]
    assert g.heart_factorizations(d, "p", "r", candidates=[]) == set()


def test_lonely_middle_is_window_exceeded():
    d = FIXTURES["fig3b_left"]
    with pytest.raises(WindowExceeded):
        g.heart_factorizations(d, "p", "r", candidates=["q_a"])


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_sign_cancellation_in_fixtures(name):
    d = FIXTURES[name]
    mu = g.maslov_table(d)
    for p, r in itertools.permutations(d.ids, 2):
        if mu[p] - mu[r] != 2:
            continue
        for qs in g.heart_groups(d, p, r):
            if len(qs) != 2:
                continue
            a, b = qs
            lhs = g.sign_n(d, p, a) * g.sign_n(d, a, r)
            rhs = g.sign_n(d, p, b) * g.sign_n(d, b, r)
            assert lhs == -rhs != 0
            assert (abs(lhs) + abs(rhs)) % 2 == 0


# ---------------------------------------------------------------- classification

def test_classification_fig4():
    d = FIXTURES["fig4"]
    cls = g.classify_points(d)
    assert "x" not in cls
    for p, flags in cls.items():
        if flags["semiprimary"]:
            assert flags["primary"]
        if flags["witnesses"]:
            assert not flags["semiprimary"]
            for w in flags["witnesses"]:
                assert w in d.points_between(p, "x", UNSTABLE) & d.points_between(p, "x", STABLE)
    assert g.primary_points(d)


def test_validation_of_random_meanders():
    # property check on freshly built meanders: always valid, μ additive
    import random
    rng = random.Random(11)
    labels = ["a", "b", "c", "d", "e"]
    built = 0
    for _ in range(40):
        line = labels[:]
        rng.shuffle(line)
        line.insert(rng.randrange(len(line) + 1), "x")
        seq = ["x"] + rng.sample(labels, len(labels))
        rng.shuffle(seq)
        try:
            d = meander(line, seq, rng.choice((ABOVE, BELOW)))
        except TangleError:
            continue
        if not g.validate_tangle(d).ok:
            continue
        built += 1
        mu = g.maslov_table(d)
        for p, q in itertools.permutations(d.ids, 2):
            assert g.maslov_rel(d, p, q) == mu[p] - mu[q]
        for p, q in gap1_pairs(d):
            assert g.lune_exists(d, p, q) == lune_oracle(d, p, q)
    assert built >= 5
