"""Small hand-built tangles.

All fixtures are *meanders*: ``W^u`` is the horizontal axis oriented east and
``W^s`` snakes across it with rectangular arcs.  A meander is given by the
left-to-right order of the crossings on the axis and the order in which
``W^s`` visits them; arcs alternate above and below the axis.

The scaffold adds three auxiliary crossings ``B``, ``C``, ``A`` around the
fixed point so that every branch of one manifold meets every branch of the
other.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .geometry import compute_intersections
from .tangle import STABLE, UNSTABLE, ManifoldArc, TangleDiagram, TangleError

ABOVE, BELOW = 1, -1
HALF = Fraction(1, 2)


def meander(line: list[str], s_seq: list[str], first_side: int, fixed: str = "x",
            metadata: dict | None = None) -> TangleDiagram:
    """Build a meander diagram.

    ``line`` lists labels west to east, ``s_seq`` the stable visiting order,
    ``first_side`` the side of the first stable arc.  ``fixed`` must occur in
    both lists; it becomes the fixed point and parameter origin.
    """
    if sorted(line) != sorted(s_seq) or len(set(line)) != len(line):
        raise TangleError("line and stable sequence must list the same distinct labels")
    pos = {lab: 2 * i for i, lab in enumerate(line)}
    x0 = pos[fixed]
    X = {lab: Fraction(v - x0) for lab, v in pos.items()}

    svs: list[tuple[Fraction, Fraction]] = []
    side = first_side
    first = s_seq[0]
    svs.append((X[first], -side * HALF))
    marks = {}
    for a, b in zip(s_seq, s_seq[1:]):
        h = side * abs(X[b] - X[a])
        marks[a] = len(svs)
        svs += [(X[a], Fraction(0)), (X[a], h), (X[b], h)]
        side = -side
    last = s_seq[-1]
    marks[last] = len(svs)
    svs += [(X[last], Fraction(0)), (X[last], side * HALF)]

    k = marks[fixed]
    stable = ManifoldArc(STABLE, tuple(svs[k:]), tuple(reversed(svs[:k + 1])))
    lo, hi = min(X.values()) - 1, max(X.values()) + 1
    east = [(Fraction(t), Fraction(0)) for t in range(0, int(hi) + 1)]
    west = [(Fraction(-t), Fraction(0)) for t in range(0, int(-lo) + 1)]
    unstable = ManifoldArc(UNSTABLE, tuple(east), tuple(west))

    pts = compute_intersections(unstable, stable)
    at = {X[lab]: lab for lab in line}
    mapping = {p.id: at[p.position[0]] for p in pts}
    meta = {"ambient": "plane", "w_orientation": "preserving"}
    meta.update(metadata or {})
    return TangleDiagram(unstable, stable, pts, meta).relabel(mapping)


def scaffolded(line_core: list[str], s_core: list[str], **kw) -> TangleDiagram:
    """Meander with the auxiliary crossings ``B``, ``x``, ``C``, ``A``.

    ``s_core`` must be entered from below, must leave its last label
    downwards, and its last label must lie west of its first one.
    """
    line = ["B"] + line_core + ["x", "C", "A"]
    s_seq = ["A", "B", "x"] + s_core + ["C"]
    return meander(line, s_seq, BELOW, **kw)


# ---------------------------------------------------------------------------
# built-in figures

def _catalogue() -> dict:
    from importlib.resources import files
    return json.loads(files("hft").joinpath("data/fixtures.json").read_text())


BUILTIN_NAMES = ("fig3a", "fig3b_left", "fig3b_right", "fig5", "fig6a", "fig6b", "fig4", "cascade")


def manifest(name: str) -> dict:
    """Expected combinatorics of a built-in figure (see ``data/fixtures.json``)."""
    cat = _catalogue()["fixtures"]
    if name not in cat:
        raise KeyError(f"unknown example {name!r}; choose from {', '.join(BUILTIN_NAMES)}")
    return cat[name]


def builtin_example(name: str) -> TangleDiagram:
    m = manifest(name)
    d = scaffolded(list(m["line"]), list(m["stable"]),
                   metadata={"example": name, "about": m["about"]})
    return d.relabel(m["labels"]) if m["labels"] else d


def check_manifest(name: str, diagram: TangleDiagram | None = None) -> list[str]:
    """Mismatches between the engine and a figure's manifest (empty when all agree)."""
    from .chain import build_complex, is_del_complete, prune
    from .geometry import heart_factorizations, maslov_abs, sign_n, validate_tangle

    m = manifest(name)
    d = builtin_example(name) if diagram is None else diagram
    bad = []
    rep = validate_tangle(d)
    if not rep.ok:
        bad.append(f"validation: {sorted(rep.codes())}")
    E = m["set"]
    for p, row in m["boundary"].items():
        for q, v in row.items():
            if maslov_abs(d, p) - maslov_abs(d, q) != 1:
                bad.append(f"mu({p}) - mu({q}) != 1")
            elif sign_n(d, p, q) != v:
                bad.append(f"n({p},{q}) = {sign_n(d, p, q)}, expected {v}")
    cx = build_complex(d, E)
    for k in cx.degrees:
        for p in cx.gens(k):
            want = {q: v for q, v in m["boundary"].get(p, {}).items() if q in E}
            if p in m["boundary"] and cx.apply(p) != want:
                bad.append(f"boundary of {p}: {cx.apply(p)} != {want}")
    if "complete" in m and is_del_complete(cx).complete != m["complete"]:
        bad.append("completeness verdict differs")
    if "pruned" in m and sorted(prune(d, E)[0]) != sorted(m["pruned"]):
        bad.append("pruned set differs")
    for p, r, pair in m.get("hearts", []):
        if frozenset(pair) not in heart_factorizations(d, p, r):
            bad.append(f"heart ({p},{r}) lacks factor pair {pair}")
    if "min_lunes_from_p" in m:
        k = sum(1 for q in d.ids if maslov_abs(d, "p") - maslov_abs(d, q) == 1 and sign_n(d, "p", q))
        if k < m["min_lunes_from_p"]:
            bad.append(f"only {k} lunes leave p")
    return bad
