"""Inclusion posets, chain-compatible inclusions and restrictions, direct limits."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import zmod
from .chain import GradedChainComplex, build_complex, is_del_complete
from .geometry import INTEGER, MOD2, ConsistencyError, maslov_abs, sign_n
from .tangle import TangleDiagram


class LimitsError(ValueError):
    """Bad input to a limits operation (non-subset, incomplete set, ...)."""


# ---------------------------------------------------------------------------
# posets

class InclusionPoset:
    """A finite family of generator sets ordered by inclusion."""

    def __init__(self, family: Iterable[Iterable[str]]):
        members: list[frozenset[str]] = []
        for s in family:
            s = frozenset(s)
            if s not in members:
                members.append(s)
        self.members = members

    def __len__(self) -> int:
        return len(self.members)

    def leq(self, i: int, j: int) -> bool:
        return self.members[i] <= self.members[j]

    def comparable_pairs(self) -> list[tuple[int, int]]:
        """All ``(i, j)`` with ``i != j`` and member ``i`` inside member ``j``."""
        n = len(self)
        return [(i, j) for i in range(n) for j in range(n) if i != j and self.leq(i, j)]

    def hasse_edges(self) -> list[tuple[int, int]]:
        n = len(self)
        return [(i, j) for i, j in self.comparable_pairs()
                if not any(k not in (i, j) and self.leq(i, k) and self.leq(k, j) for k in range(n))]

    def upper_bounds(self, i: int, j: int) -> list[int]:
        return [k for k in range(len(self)) if self.leq(i, k) and self.leq(j, k)]

    def directed(self) -> tuple[bool, tuple[int, int] | None]:
        for i, j in itertools.combinations(range(len(self)), 2):
            if not self.upper_bounds(i, j):
                return False, (i, j)
        return True, None

    @property
    def maximum(self) -> int | None:
        for k in range(len(self)):
            if all(self.leq(i, k) for i in range(len(self))):
                return k
        return None

    def label(self, i: int) -> str:
        return "{" + ",".join(sorted(self.members[i])) + "}"


def check_poset_directed(family: Iterable[Iterable[str]]):
    """``(True, None)`` or ``(False, (A, B))`` with a pair lacking an upper bound."""
    P = InclusionPoset(family)
    ok, pair = P.directed()
    if ok:
        return True, None
    i, j = pair
    return False, (sorted(P.members[i]), sorted(P.members[j]))


# ---------------------------------------------------------------------------
# chain compatibility

@dataclass
class CompatReport:
    ok: bool
    witness: tuple[str, str] | str | None = None
    direct: bool = True
    criterion: bool = True

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        w = self.witness
        return {"ok": self.ok, "witness": list(w) if isinstance(w, tuple) else w}


def _complexes(diagram, D, E, orientation, mode):
    D, E = set(D), set(E)
    if not D <= E:
        raise LimitsError(f"not a subset: {sorted(D - E)} missing from the larger set")
    cd = build_complex(diagram, D, orientation, mode)
    ce = build_complex(diagram, E, orientation, mode)
    for name, cx in (("smaller", cd), ("larger", ce)):
        rep = is_del_complete(cx)
        if not rep.complete:
            raise LimitsError(f"{name} set is not boundary-complete (witness {rep.witness})")
    return D, E, cd, ce


def _reduce(v: int, mode: str) -> int:
    return v % 2 if mode == MOD2 else v


def check_chain_compatible(diagram: TangleDiagram, D: Iterable[str], E: Iterable[str],
                           orientation: int = 1, mode: str = INTEGER) -> CompatReport:
    """Whether the inclusion ``ZD -> ZE`` commutes with the boundaries.

    The direct matrix identity and the criterion "no ``p`` in ``D`` has a
    lune to a point of ``E \\ D``" are both evaluated and must agree.
    """
    D, E, cd, ce = _complexes(diagram, D, E, orientation, mode)
    direct_w = None
    for p in sorted(D):
        lhs = cd.apply(p)
        rhs = ce.apply(p)
        for q in sorted(set(lhs) | set(rhs)):
            if _reduce(lhs.get(q, 0) - rhs.get(q, 0), mode):
                direct_w = (p, q)
                break
        if direct_w:
            break
    crit_w = None
    for p in sorted(D):
        for q in sorted(E - D):
            if maslov_abs(diagram, p) - maslov_abs(diagram, q) == 1 and sign_n(diagram, p, q, orientation, mode):
                crit_w = (p, q)
                break
        if crit_w:
            break
    if (direct_w is None) != (crit_w is None):
        raise ConsistencyError(f"inclusion check disagrees with criterion: {direct_w} vs {crit_w}")
    return CompatReport(direct_w is None, direct_w, direct_w is None, crit_w is None)


def restriction_is_chain_map(diagram: TangleDiagram, E: Iterable[str], D: Iterable[str],
                             orientation: int = 1, mode: str = INTEGER) -> CompatReport:
    """Whether the projection ``ZE -> ZD`` (Kronecker restriction) is a chain map.

    Direct identity ``R d^E = d^D R`` versus the criterion that no point of
    ``E \\ D`` has a lune into ``D``; the witness is such a point.
    """
    D, E, cd, ce = _complexes(diagram, D, E, orientation, mode)
    direct_w = None
    for p in sorted(E):
        lhs = {q: v for q, v in ce.apply(p).items() if q in D}
        rhs = cd.apply(p) if p in D else {}
        if any(_reduce(lhs.get(q, 0) - rhs.get(q, 0), mode) for q in set(lhs) | set(rhs)):
            direct_w = p
            break
    crit_w = None
    for p in sorted(E - D):
        if any(maslov_abs(diagram, p) - maslov_abs(diagram, q) == 1
               and sign_n(diagram, p, q, orientation, mode) for q in sorted(D)):
            crit_w = p
            break
    if (direct_w is None) != (crit_w is None):
        raise ConsistencyError(f"restriction check disagrees with criterion: {direct_w} vs {crit_w}")
    return CompatReport(direct_w is None, direct_w, direct_w is None, crit_w is None)


def chain_maps(cd: GradedChainComplex, ce: GradedChainComplex, bound: int = 3,
               limit: int = 10 ** 6) -> list[dict[int, np.ndarray]]:
    """All grading-preserving chain maps ``ZD -> ZE`` with entries in ``[-bound, bound]``.

    Brute force over generator images, one matrix ``g_k`` per degree of
    ``D``; a map is kept when ``g_{k-1} d^D_k = d^E_k g_k`` in every degree.
    """
    degs = cd.degrees
    shapes = [(len(ce.gens(k)), len(cd.gens(k))) for k in degs]
    size = sum(r * c for r, c in shapes)
    if (2 * bound + 1) ** size > limit:
        raise LimitsError(f"search space {(2 * bound + 1)}^{size} exceeds {limit}")
    rng = range(-bound, bound + 1)
    out = []
    for flat in itertools.product(rng, repeat=size):
        g, at = {}, 0
        for k, (r, c) in zip(degs, shapes):
            g[k] = np.array(flat[at:at + r * c], dtype=object).reshape(r, c)
            at += r * c
        ok = True
        for k in degs:
            lower = g.get(k - 1)
            lhs = zmod.matmul(lower, cd.boundary(k)) if lower is not None and lower.size else None
            rhs = zmod.matmul(ce.boundary(k), g[k]) if len(ce.gens(k - 1)) else None
            lz = lhs is None or zmod.is_zero(lhs)
            rz = rhs is None or zmod.is_zero(rhs)
            if lhs is not None and rhs is not None:
                if zmod._to_lists(lhs) != zmod._to_lists(rhs):
                    ok = False
            elif not (lz and rz):
                ok = False
            if not ok:
                break
        if ok:
            out.append(g)
    return out


# ---------------------------------------------------------------------------
# direct systems of finitely presented groups

@dataclass
class Presentation:
    """``Z^n / R`` with ``R`` an ``n x m`` relation matrix."""

    n: int
    R: np.ndarray

    @classmethod
    def of_group(cls, g: zmod.FgAbelianGroup) -> "Presentation":
        return cls(g.ngens, g.relation_matrix())

    @property
    def cokernel(self) -> zmod.Cokernel:
        return zmod.Cokernel(self.R, self.n)


@dataclass
class DirectSystem:
    """Groups over an inclusion poset with transition matrices.

    ``maps[(i, j)]`` is an integer matrix ``n_j x n_i`` for every comparable
    pair ``i < j``; the identity is implied for ``i == j``.
    """

    poset: InclusionPoset
    nodes: list[Presentation]
    maps: dict[tuple[int, int], np.ndarray]

    def gamma(self, i: int, j: int) -> np.ndarray:
        return zmod.identity(self.nodes[i].n) if i == j else self.maps[(i, j)]

    def coherence_failures(self) -> list[tuple[int, int, int]]:
        """Composable ``(i, j, k)`` with ``g_jk g_ij != g_ik`` in node ``k``."""
        bad = []
        P = self.poset
        for (i, j) in P.comparable_pairs():
            for k in range(len(P)):
                if k in (i, j) or not P.leq(j, k):
                    continue
                diff = zmod.matmul(self.gamma(j, k), self.gamma(i, j)) - self.gamma(i, k)
                ck = self.nodes[k].cokernel
                if any(not ck.is_zero(diff[:, c]) for c in range(diff.shape[1])):
                    bad.append((i, j, k))
        return bad


@dataclass
class LimitResult:
    group: zmod.FgAbelianGroup
    cokernel: zmod.Cokernel
    offsets: list[int]
    n_relations: int

    def lam(self, i: int, c: Sequence[int], total: int) -> list[int]:
        """The vector ``lambda^i(c)`` in the big generator space."""
        v = [0] * total
        for t, x in enumerate(c):
            v[self.offsets[i] + t] = int(x)
        return v


def _assemble(system: DirectSystem, edges, extra: Sequence[Sequence[int]] = ()):
    offsets, total = [], 0
    for node in system.nodes:
        offsets.append(total)
        total += node.n
    cols = []
    for i, node in enumerate(system.nodes):
        for c in range(node.R.shape[1]):
            v = [0] * total
            for r in range(node.n):
                v[offsets[i] + r] = int(node.R[r, c])
            cols.append(v)
    for i, j in edges:
        g = system.gamma(i, j)
        for c in range(system.nodes[i].n):
            v = [0] * total
            for r in range(system.nodes[j].n):
                v[offsets[j] + r] += int(g[r, c])
            v[offsets[i] + c] -= 1
            cols.append(v)
    cols += [list(v) for v in extra]
    R = zmod.as_matrix([list(col) for col in zip(*cols)], rows=total) if cols and total else zmod.zeros(total, 0)
    return offsets, total, R


def direct_limit(system: DirectSystem, relations: str = "hasse") -> LimitResult:
    """Colimit ``(sum of nodes) / S`` in canonical form.

    ``relations`` is ``"hasse"`` (one block per Hasse edge) or ``"all"``
    (every comparable pair).  When the poset has a maximum, the result is
    checked against that node.
    """
    edges = system.poset.hasse_edges() if relations == "hasse" else system.poset.comparable_pairs()
    offsets, total, R = _assemble(system, edges)
    ck = zmod.Cokernel(R, total)
    m = system.poset.maximum
    if m is not None and ck.group != system.nodes[m].cokernel.group:
        raise ConsistencyError(f"limit {ck.group} differs from the maximum node {system.nodes[m].cokernel.group}")
    return LimitResult(ck.group, ck, offsets, R.shape[1])


def vanishing_check(system: DirectSystem, bound: int = 2) -> list[tuple[int, tuple[int, ...]]]:
    """Elements where "zero in the limit" and "killed by some transition" disagree.

    Exhaustive over coefficient vectors in ``[-bound, bound]`` at every node.
    Needs a directed poset.
    """
    ok, _ = system.poset.directed()
    if not ok:
        raise LimitsError("vanishing criterion needs a directed poset")
    lim = direct_limit(system)
    total = sum(n.n for n in system.nodes)
    bad = []
    for i, node in enumerate(system.nodes):
        for c in itertools.product(range(-bound, bound + 1), repeat=node.n):
            zero_lim = lim.cokernel.is_zero(lim.lam(i, c, total))
            killed = False
            for k in range(len(system.poset)):
                if system.poset.leq(i, k):
                    img = [sum(int(system.gamma(i, k)[r, t]) * c[t] for t in range(node.n))
                           for r in range(system.nodes[k].n)]
                    if system.nodes[k].cokernel.is_zero(img):
                        killed = True
                        break
            if zero_lim != killed:
                bad.append((i, c))
    return bad


def quotient_check(system: DirectSystem, sub: list[np.ndarray]) -> tuple[zmod.FgAbelianGroup, zmod.FgAbelianGroup]:
    """Limit of the quotient system versus quotient of the limit.

    ``sub[i]`` lists (as columns) the images in node ``i`` of a compatible
    subsystem.  Returns both canonical groups; they agree on directed posets.
    """
    ok, _ = system.poset.directed()
    if not ok:
        raise LimitsError("quotient comparison needs a directed poset")
    qnodes = []
    for node, g in zip(system.nodes, sub):
        R = np.concatenate([node.R, zmod.as_matrix(g, rows=node.n)], axis=1) if g.shape[1] else node.R
        qnodes.append(Presentation(node.n, R))
    q_lim = direct_limit(DirectSystem(system.poset, qnodes, system.maps)).group
    extra = []
    offsets, total, _ = _assemble(system, [])
    for i, g in enumerate(sub):
        for c in range(g.shape[1]):
            v = [0] * total
            for r in range(system.nodes[i].n):
                v[offsets[i] + r] = int(g[r, c])
            extra.append(v)
    _, total, R = _assemble(system, system.poset.hasse_edges(), extra)
    return q_lim, zmod.Cokernel(R, total).group


# ---------------------------------------------------------------------------
# homology systems

@dataclass
class HomologySystem:
    poset: InclusionPoset
    mode: str
    degrees: list[int]
    bases: dict[int, list[zmod.HomologyBasis]]
    edges: dict[int, dict[tuple[int, int], zmod.GroupMorphism]]
    compat: dict[tuple[int, int], CompatReport] = field(default_factory=dict)

    def node_group(self, k: int, i: int) -> zmod.FgAbelianGroup:
        return self.bases[k][i].group

    def system(self, k: int) -> DirectSystem:
        """Degree-``k`` direct system in presentation form."""
        nodes = []
        for b in self.bases[k]:
            g = b.group
            if self.mode == MOD2:
                nodes.append(Presentation(g.ngens, 2 * zmod.identity(g.ngens)))
            else:
                nodes.append(Presentation.of_group(g))
        maps = {e: m.matrix for e, m in self.edges[k].items()}
        return DirectSystem(self.poset, nodes, maps)

    def limit(self, k: int, relations: str = "hasse") -> zmod.FgAbelianGroup:
        g = direct_limit(self.system(k), relations).group
        if self.mode == MOD2:
            return zmod.FgAbelianGroup(len(g.torsion) + g.free_rank)
        return g

    def to_json(self) -> dict:
        P = self.poset
        return {
            "mode": self.mode,
            "sets": [sorted(m) for m in P.members],
            "directed": P.directed()[0],
            "compatibility": [{"from": sorted(P.members[i]), "to": sorted(P.members[j]), **r.to_json()}
                              for (i, j), r in self.compat.items()],
            "degrees": {str(k): {
                "nodes": [b.group.to_json() for b in self.bases[k]],
                "edges": [{"from": i, "to": j, "matrix": zmod._to_lists(m.matrix)}
                          for (i, j), m in sorted(self.edges[k].items())],
                "limit": self.limit(k).to_json(),
            } for k in self.degrees},
        }


def _inclusion(cs: GradedChainComplex, ct: GradedChainComplex, k: int) -> np.ndarray:
    src, tgt = cs.gens(k), ct.gens(k)
    M = zmod.zeros(len(tgt), len(src))
    for j, p in enumerate(src):
        M[tgt.index(p), j] = 1
    return M


def build_homology_system(diagram: TangleDiagram, family: Iterable[Iterable[str]],
                          orientation: int = 1, mode: str = INTEGER) -> HomologySystem:
    """Homology groups of each member and the maps induced by inclusions.

    Every comparable pair must be chain compatible; functoriality is checked
    on all composable triples.
    """
    P = InclusionPoset(family)
    cxs = [build_complex(diagram, m, orientation, mode) for m in P.members]
    for i, cx in enumerate(cxs):
        rep = is_del_complete(cx)
        if not rep.complete:
            raise LimitsError(f"member {P.label(i)} is not boundary-complete (witness {rep.witness})")
    compat = {}
    for i, j in P.comparable_pairs():
        r = check_chain_compatible(diagram, P.members[i], P.members[j], orientation, mode)
        if not r.ok:
            raise zmod.ChainMapError(f"inclusion {P.label(i)} -> {P.label(j)} is not a chain map; witness {r.witness}")
        compat[(i, j)] = r
    degrees = sorted({k for cx in cxs for k in cx.degrees})
    bases, edges = {}, {}
    for k in degrees:
        bases[k] = [zmod.homology_basis(cx.boundary(k), cx.boundary(k + 1), mode, len(cx.gens(k)))
                    for cx in cxs]
        edges[k] = {}
        for i, j in P.comparable_pairs():
            f = _inclusion(cxs[i], cxs[j], k)
            m = zmod.induced_quotient_map(f, bases[k][i], bases[k][j], cxs[i].boundary(k + 1))
            if mode == MOD2:
                m = zmod.GroupMorphism(m.source, m.target, m.matrix % 2)
            edges[k][(i, j)] = m
        for (i, j) in P.comparable_pairs():
            for l in range(len(P)):
                if l in (i, j) or not P.leq(j, l):
                    continue
                comp = edges[k][(j, l)].compose(edges[k][(i, j)])
                direct = edges[k][(i, l)]
                mat = comp.matrix % 2 if mode == MOD2 else comp.matrix
                if zmod._to_lists(mat) != zmod._to_lists(direct.matrix):
                    raise ConsistencyError(f"functoriality fails in degree {k} on {P.label(i)} -> {P.label(j)} -> {P.label(l)}")
    return HomologySystem(P, mode, degrees, bases, edges, compat)
