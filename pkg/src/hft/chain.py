"""Graded chain complexes on sets of homoclinic points, pruning, homology."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import zmod
from .geometry import INTEGER, MOD2, heart_middles, maslov_abs, sign_n
from .tangle import TangleDiagram, TangleError


def graded(diagram: TangleDiagram, E: Iterable[str]) -> dict[int, list[str]]:
    """Partition ``E`` by Maslov index; ids inside a degree are sorted."""
    out: dict[int, list[str]] = {}
    for p in sorted(set(E)):
        if p not in diagram:
            raise TangleError(f"unknown point {p!r}")
        out.setdefault(maslov_abs(diagram, p), []).append(p)
    return dict(sorted(out.items()))


@dataclass
class GradedChainComplex:
    """``ZE`` with boundary matrices ``d[k]: ZE_k -> ZE_{k-1}``.

    Entry ``(q, p)`` of ``d[k]`` is ``n(p, q)``.  Degrees without an entry in
    ``d`` have zero differential.
    """

    generators: dict[int, list[str]]
    d: dict[int, np.ndarray]
    mode: str = INTEGER
    orientation: int = 1

    @property
    def degrees(self) -> list[int]:
        return sorted(self.generators)

    @property
    def k_min(self) -> int | None:
        return min(self.generators) if self.generators else None

    @property
    def k_max(self) -> int | None:
        return max(self.generators) if self.generators else None

    def gens(self, k: int) -> list[str]:
        return self.generators.get(k, [])

    def boundary(self, k: int) -> np.ndarray:
        """``d_k`` as a (possibly empty) matrix."""
        if k in self.d:
            return self.d[k]
        return zmod.zeros(len(self.gens(k - 1)), len(self.gens(k)))

    def apply(self, p: str) -> dict[str, int]:
        """Boundary of a single generator as a sparse chain."""
        for k, gs in self.generators.items():
            if p in gs:
                col = self.boundary(k)[:, gs.index(p)]
                return {q: int(c) for q, c in zip(self.gens(k - 1), col) if c}
        raise KeyError(p)

    def square(self, k: int) -> np.ndarray:
        """``d_{k-1} d_k``, reduced mod 2 in ``z2`` mode."""
        m = zmod.matmul(self.boundary(k - 1), self.boundary(k))
        return m % 2 if self.mode == MOD2 else m

    def to_json(self) -> dict:
        return {"mode": self.mode, "orientation": "u+" if self.orientation > 0 else "u-",
                "generators": {str(k): v for k, v in self.generators.items()},
                "boundary": {str(k): zmod._to_lists(self.boundary(k))
                             for k in self.degrees if self.gens(k - 1)}}


def build_complex(diagram: TangleDiagram, E: Iterable[str], orientation: int = 1,
                  mode: str = INTEGER) -> GradedChainComplex:
    gens = graded(diagram, E)
    d = {}
    for k, gs in gens.items():
        lower = gens.get(k - 1)
        if not lower:
            continue
        m = zmod.zeros(len(lower), len(gs))
        for j, p in enumerate(gs):
            for i, q in enumerate(lower):
                try:
                    m[i, j] = sign_n(diagram, p, q, orientation, mode)
                except TangleError as exc:
                    raise type(exc)(f"pair ({p},{q}): {exc}") from exc
        d[k] = m
    return GradedChainComplex(gens, d, mode, orientation)


# ---------------------------------------------------------------------------
# completeness

def heart_forming(cx: GradedChainComplex, p: str, q: str, r: str) -> bool:
    a, b = cx.apply(p).get(q, 0), cx.apply(q).get(r, 0)
    return (a * b) % 2 != 0 if cx.mode == MOD2 else a * b != 0


def unpartnered_triples(cx: GradedChainComplex) -> list[tuple[str, str, str]]:
    """Heart-forming triples ``(p,q,r)`` with no second middle point in the complex."""
    out = []
    for k in cx.degrees:
        for p in cx.gens(k):
            for q in cx.gens(k - 1):
                for r in cx.gens(k - 2):
                    if heart_forming(cx, p, q, r) and not any(
                            heart_forming(cx, p, q2, r) for q2 in cx.gens(k - 1) if q2 != q):
                        out.append((p, q, r))
    return out


@dataclass
class CompletenessReport:
    complete: bool
    witness: str | None = None           # p with (d d) p != 0
    image: dict[str, int] = field(default_factory=dict)
    triple: tuple[str, str, str] | None = None

    def __bool__(self) -> bool:
        return self.complete

    def to_json(self) -> dict:
        return {"complete": self.complete, "witness": self.witness,
                "dd_witness": self.image, "unpartnered_triple": list(self.triple) if self.triple else None}


def is_del_complete(cx: GradedChainComplex) -> CompletenessReport:
    """``d d = 0``, cross-checked against the partner criterion.

    The algebraic test and the "every heart-forming triple has a partner"
    test must agree; a mismatch raises.
    """
    from .geometry import ConsistencyError
    witness, image = None, {}
    for k in cx.degrees:
        sq = cx.square(k)
        if zmod.is_zero(sq):
            continue
        for j, p in enumerate(cx.gens(k)):
            col = sq[:, j]
            if any(col):
                witness = p
                image = {r: int(c) for r, c in zip(cx.gens(k - 2), col) if c}
                break
        break
    bad = unpartnered_triples(cx)
    if (witness is None) != (not bad):
        raise ConsistencyError(f"dd test ({witness}) disagrees with partner test ({bad[:1]})")
    triple = None
    if witness is not None:
        triple = next((t for t in bad if t[0] == witness), bad[0])
    return CompletenessReport(witness is None, witness, image, triple)


# ---------------------------------------------------------------------------
# pruning

@dataclass(frozen=True)
class PruneRecord:
    point: str
    level: int
    round: int
    triple: tuple[str, str, str]

    def to_json(self) -> dict:
        return {"point": self.point, "level": self.level, "round": self.round,
                "triple": list(self.triple)}


@dataclass
class PruneLog:
    records: list[PruneRecord] = field(default_factory=list)

    @property
    def deleted(self) -> list[str]:
        return [r.point for r in self.records]

    def to_json(self) -> list[dict]:
        return [r.to_json() for r in self.records]


def _lunes(diagram, p, q, orientation, mode) -> bool:
    return sign_n(diagram, p, q, orientation, mode) != 0


def prune(diagram: TangleDiagram, E: Iterable[str], orientation: int = 1,
          mode: str = INTEGER, seed: int | None = None) -> tuple[frozenset[str], PruneLog]:
    """Delete middle points of heart-forming triples that lack a cutting partner.

    Levels are processed from the top down.  Within a level, rounds over all
    triples repeat until a round deletes nothing.  ``seed`` shuffles the scan
    order of triples (the result does not depend on it).
    """
    gens = graded(diagram, E)
    current = set(p for gs in gens.values() for p in gs)
    log = PruneLog()
    if not gens:
        return frozenset(), log
    rng = random.Random(seed) if seed is not None else None
    kp, km = max(gens), min(gens)
    for off in range(0, kp - km - 1):
        top = kp - off
        rnd = 0
        while True:
            rnd += 1
            triples = [(p, q, r) for p in gens.get(top, []) for q in gens.get(top - 1, [])
                       for r in gens.get(top - 2, [])]
            if rng is not None:
                rng.shuffle(triples)
            deleted = False
            for p, q, r in triples:
                if not (p in current and q in current and r in current):
                    continue
                if not (_lunes(diagram, p, q, orientation, mode) and _lunes(diagram, q, r, orientation, mode)):
                    continue
                others = [c for c in gens.get(top - 1, []) if c in current and c != q]
                if heart_middles(diagram, p, r, others):
                    continue
                current.discard(q)
                log.records.append(PruneRecord(q, top - 1, rnd, (p, q, r)))
                deleted = True
            if not deleted:
                break
    return frozenset(current), log


# ---------------------------------------------------------------------------
# homology

@dataclass
class HomologyResult:
    pruned: frozenset[str]
    log: PruneLog
    complex: GradedChainComplex
    groups: dict[int, zmod.FgAbelianGroup]

    def to_json(self) -> dict:
        return {"pruned_set": sorted(self.pruned), "prune_log": self.log.to_json(),
                "complex": self.complex.to_json(),
                "homology": {str(k): g.to_json() for k, g in self.groups.items()}}


def complex_homology(cx: GradedChainComplex) -> dict[int, zmod.FgAbelianGroup]:
    out = {}
    for k in cx.degrees:
        n = len(cx.gens(k))
        out[k] = zmod.homology_of_pair(cx.boundary(k), cx.boundary(k + 1), cx.mode, n)
    return out


def local_floer_homology(diagram: TangleDiagram, E: Iterable[str], orientation: int = 1,
                         mode: str = INTEGER) -> HomologyResult:
    """Homology of the complex on ``prune(E)``, for degrees ``k-(E) .. k+(E)``."""
    E = list(E)
    pruned, log = prune(diagram, E, orientation, mode)
    cx = build_complex(diagram, pruned, orientation, mode)
    groups = complex_homology(cx)
    degs = graded(diagram, E)
    if degs:
        for k in range(min(degs), max(degs) + 1):
            groups.setdefault(k, zmod.FgAbelianGroup(0, ()))
    return HomologyResult(pruned, log, cx, dict(sorted(groups.items())))
