"""Exact integer linear algebra.

Smith normal form, finitely generated abelian groups, homology of a pair of
boundary matrices and the maps they induce.  Matrices are numpy arrays with
``dtype=object`` holding Python ints, so entries never overflow and empty
shapes such as ``(0, 3)`` behave.

Canonical homology basis
------------------------
For ``H = ker A / im B`` we take the saturated kernel basis ``K`` coming from
the column operations of ``snf(A)``, write ``B = K C`` and diagonalise
``U C V = D``.  The columns of ``K U^-1`` form the canonical basis; the ones
with ``d_i = 1`` are dropped, torsion generators come first (ascending order)
followed by the free ones.  The pivot choice in :func:`smith_normal_form` is
deterministic, so the basis is stable across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd
from typing import Sequence

import numpy as np

INTEGER = "z"
MOD2 = "z2"
MODES = (INTEGER, MOD2)


class NotAComplexError(ValueError):
    """Raised when ``A @ B != 0`` for a supposed pair of boundary maps."""


class ChainMapError(ValueError):
    """Raised when a chain-level map does not descend to homology."""


def as_matrix(data, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Coerce ``data`` into an object-dtype integer matrix.

    ``rows``/``cols`` fix the shape of empty inputs.
    """
    if isinstance(data, np.ndarray) and data.ndim == 2 and data.dtype == object:
        m = data
    else:
        lst = [list(map(int, row)) for row in data]
        if not lst:
            m = np.zeros((rows or 0, cols or 0), dtype=object)
            for idx in np.ndindex(m.shape):
                m[idx] = 0
        else:
            m = np.empty((len(lst), len(lst[0])), dtype=object)
            for i, row in enumerate(lst):
                if len(row) != m.shape[1]:
                    raise ValueError("ragged matrix")
                for j, v in enumerate(row):
                    m[i, j] = v
    if rows is not None and m.shape[0] != rows:
        raise ValueError(f"expected {rows} rows, got {m.shape[0]}")
    if cols is not None and m.shape[1] != cols:
        raise ValueError(f"expected {cols} cols, got {m.shape[1]}")
    return m


def zeros(rows: int, cols: int) -> np.ndarray:
    m = np.empty((rows, cols), dtype=object)
    m.fill(0)
    return m


def identity(n: int) -> np.ndarray:
    m = zeros(n, n)
    for i in range(n):
        m[i, i] = 1
    return m


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch {a.shape} @ {b.shape}")
    out = zeros(a.shape[0], b.shape[1])
    if a.shape[1] == 0:
        return out
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            out[i, j] = sum(a[i, k] * b[k, j] for k in range(a.shape[1]))
    return out


def is_zero(m: np.ndarray) -> bool:
    return all(v == 0 for v in m.flat)


def _to_lists(m: np.ndarray) -> list[list[int]]:
    return [[int(v) for v in row] for row in m]


def _from_lists(rows: list[list[int]], nrows: int, ncols: int) -> np.ndarray:
    out = zeros(nrows, ncols)
    for i in range(nrows):
        for j in range(ncols):
            out[i, j] = rows[i][j]
    return out


@dataclass
class SmithForm:
    """Result of :func:`smith_decomposition`: ``U @ A @ V == D``."""

    U: np.ndarray
    D: np.ndarray
    V: np.ndarray
    U_inv: np.ndarray
    V_inv: np.ndarray

    @property
    def diagonal(self) -> list[int]:
        n = min(self.D.shape)
        return [int(self.D[i, i]) for i in range(n)]

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diagonal if d != 0)


def smith_decomposition(A) -> SmithForm:
    """Smith normal form with unimodular transforms and their inverses."""
    A = as_matrix(A)
    m, n = A.shape
    a = _to_lists(A)
    u = _to_lists(identity(m))
    ui = _to_lists(identity(m))
    v = _to_lists(identity(n))
    vi = _to_lists(identity(n))

    # Row op "row_i += c*row_j" is U <- E U, and U^-1 <- U^-1 E^-1 (a column op).
    def row_add(i, j, c):
        if c == 0:
            return
        a[i] = [x + c * y for x, y in zip(a[i], a[j])]
        u[i] = [x + c * y for x, y in zip(u[i], u[j])]
        for r in ui:
            r[j] -= c * r[i]

    def row_swap(i, j):
        if i == j:
            return
        a[i], a[j] = a[j], a[i]
        u[i], u[j] = u[j], u[i]
        for r in ui:
            r[i], r[j] = r[j], r[i]

    def row_neg(i):
        a[i] = [-x for x in a[i]]
        u[i] = [-x for x in u[i]]
        for r in ui:
            r[i] = -r[i]

    def col_add(i, j, c):
        # col_i += c*col_j : V <- V E, V^-1 <- E^-1 V^-1 (a row op)
        if c == 0:
            return
        for r in a:
            r[i] += c * r[j]
        for r in v:
            r[i] += c * r[j]
        vi[j] = [x - c * y for x, y in zip(vi[j], vi[i])]

    def col_swap(i, j):
        if i == j:
            return
        for r in a:
            r[i], r[j] = r[j], r[i]
        for r in v:
            r[i], r[j] = r[j], r[i]
        vi[i], vi[j] = vi[j], vi[i]

    t = 0
    while t < min(m, n):
        # pivot: smallest nonzero |entry| in the trailing block, first in row-major order
        best = None
        for i in range(t, m):
            for j in range(t, n):
                x = a[i][j]
                if x != 0 and (best is None or abs(x) < best[0]):
                    best = (abs(x), i, j)
        if best is None:
            break
        _, i0, j0 = best
        row_swap(t, i0)
        col_swap(t, j0)
        while True:
            done = True
            p = a[t][t]
            for i in range(t + 1, m):
                if a[i][t] != 0:
                    row_add(i, t, -(a[i][t] // p))
                    if a[i][t] != 0:
                        done = False
            for j in range(t + 1, n):
                if a[t][j] != 0:
                    col_add(j, t, -(a[t][j] // p))
                    if a[t][j] != 0:
                        done = False
            if done:
                # divisibility of the remaining block
                bad = None
                for i in range(t + 1, m):
                    for j in range(t + 1, n):
                        if a[i][j] % p != 0:
                            bad = i
                            break
                    if bad is not None:
                        break
                if bad is None:
                    break
                row_add(t, bad, 1)
                continue
            # move the smallest nonzero of row/col t onto the pivot
            best = (abs(a[t][t]), t, t)
            for i in range(t + 1, m):
                if a[i][t] != 0 and abs(a[i][t]) < best[0]:
                    best = (abs(a[i][t]), i, t)
            for j in range(t + 1, n):
                if a[t][j] != 0 and abs(a[t][j]) < best[0]:
                    best = (abs(a[t][j]), t, j)
            row_swap(t, best[1])
            col_swap(t, best[2])
        if a[t][t] < 0:
            row_neg(t)
        t += 1

    return SmithForm(
        U=_from_lists(u, m, m),
        D=_from_lists(a, m, n),
        V=_from_lists(v, n, n),
        U_inv=_from_lists(ui, m, m),
        V_inv=_from_lists(vi, n, n),
    )


def smith_normal_form(A) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(U, D, V)`` with ``U @ A @ V == D`` in Smith normal form."""
    s = smith_decomposition(A)
    return s.U, s.D, s.V


def invariant_factors(A) -> list[int]:
    """Nonzero diagonal entries of the Smith normal form, ``d_1 | d_2 | ...``."""
    return [d for d in smith_decomposition(A).diagonal if d != 0]


@dataclass(frozen=True, order=True)
class FgAbelianGroup:
    """Isomorphism type ``Z^free_rank + Z/d_1 + ... + Z/d_s`` with ``d_i | d_{i+1}``."""

    free_rank: int = 0
    torsion: tuple[int, ...] = ()

    def __post_init__(self):
        if self.free_rank < 0:
            raise ValueError("negative free rank")
        t = tuple(int(d) for d in self.torsion)
        if any(d < 2 for d in t):
            raise ValueError(f"torsion coefficients must be >= 2: {t}")
        if any(t[i + 1] % t[i] for i in range(len(t) - 1)):
            raise ValueError(f"torsion not a divisibility chain: {t}")
        object.__setattr__(self, "torsion", t)

    @classmethod
    def from_relations(cls, n_generators: int, relations) -> "FgAbelianGroup":
        """Cokernel ``Z^n / R Z^m`` of a relation matrix with ``n`` rows."""
        R = as_matrix(relations, rows=n_generators) if len(relations) else zeros(n_generators, 0)
        diag = smith_decomposition(R).diagonal
        nonzero = [d for d in diag if d != 0]
        return cls(n_generators - len(nonzero), tuple(d for d in nonzero if d > 1))

    @property
    def is_trivial(self) -> bool:
        return self.free_rank == 0 and not self.torsion

    @property
    def orders(self) -> tuple[int, ...]:
        """Order of each canonical generator, 0 meaning infinite."""
        return self.torsion + (0,) * self.free_rank

    @property
    def ngens(self) -> int:
        return len(self.torsion) + self.free_rank

    def relation_matrix(self) -> np.ndarray:
        R = zeros(self.ngens, len(self.torsion))
        for i, d in enumerate(self.torsion):
            R[i, i] = d
        return R

    def to_json(self) -> dict:
        return {"rank": self.free_rank, "torsion": list(self.torsion)}

    def __str__(self) -> str:
        parts = [f"Z/{d}" for d in self.torsion]
        if self.free_rank:
            parts.append("Z" if self.free_rank == 1 else f"Z^{self.free_rank}")
        return " + ".join(parts) if parts else "0"


def reduce_coords(coords: Sequence[int], orders: Sequence[int]) -> tuple[int, ...]:
    return tuple(int(c) % d if d else int(c) for c, d in zip(coords, orders))


@dataclass(frozen=True)
class GroupMorphism:
    """Homomorphism between canonical groups, given on canonical generators.

    Column ``j`` holds the image of source generator ``j``.
    """

    source: FgAbelianGroup
    target: FgAbelianGroup
    matrix: np.ndarray = field(compare=False)

    def __post_init__(self):
        M = as_matrix(self.matrix, rows=self.target.ngens, cols=self.source.ngens) \
            if len(self.matrix) else zeros(self.target.ngens, self.source.ngens)
        red = zeros(*M.shape)
        for j in range(M.shape[1]):
            col = reduce_coords(M[:, j], self.target.orders)
            for i, v in enumerate(col):
                red[i, j] = v
        object.__setattr__(self, "matrix", red)
        # relations of the source must land in the target relations
        for j, d in enumerate(self.source.orders):
            if d == 0:
                continue
            img = reduce_coords([d * x for x in red[:, j]], self.target.orders)
            if any(img):
                raise ChainMapError(
                    f"generator {j} of order {d} maps to an element of different order")

    def __call__(self, coords: Sequence[int]) -> tuple[int, ...]:
        out = [sum(int(self.matrix[i, j]) * int(c) for j, c in enumerate(coords))
               for i in range(self.target.ngens)]
        return reduce_coords(out, self.target.orders)

    def compose(self, first: "GroupMorphism") -> "GroupMorphism":
        """``self o first``."""
        if first.target != self.source:
            raise ValueError("morphisms not composable")
        return GroupMorphism(first.source, self.target, matmul(self.matrix, first.matrix))

    def same_as(self, other: "GroupMorphism") -> bool:
        return (self.source == other.source and self.target == other.target
                and _to_lists(self.matrix) == _to_lists(other.matrix))

    def to_json(self) -> dict:
        return {"source": self.source.to_json(), "target": self.target.to_json(),
                "matrix": _to_lists(self.matrix)}


# --------------------------------------------------------------------------
# mod 2 linear algebra

def _rref_mod2(rows: list[list[int]], ncols: int):
    """Row-reduce over GF(2).  Returns (reduced rows, pivot columns)."""
    rows = [[x & 1 for x in r] for r in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                rows[i] = [x ^ y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    return rows[:r], pivots


def _kernel_mod2(A: np.ndarray) -> list[list[int]]:
    m, n = A.shape
    red, pivots = _rref_mod2(_to_lists(A), n)
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        vec = [0] * n
        vec[f] = 1
        for row, pc in zip(red, pivots):
            if row[f]:
                vec[pc] = 1
        basis.append(vec)
    return basis


def _solve_mod2(columns: list[list[int]], target: list[int]) -> list[int] | None:
    """Solve ``sum x_j columns[j] == target`` over GF(2)."""
    n = len(target)
    k = len(columns)
    aug = [[columns[j][i] & 1 for j in range(k)] + [target[i] & 1] for i in range(n)]
    red, pivots = _rref_mod2(aug, k + 1)
    if k in pivots:
        return None
    x = [0] * k
    for row, pc in zip(red, pivots):
        x[pc] = row[k]
    return x


# --------------------------------------------------------------------------
# homology

def _check_pair(A: np.ndarray, B: np.ndarray, mode: str):
    if A.shape[1] != B.shape[0]:
        raise NotAComplexError(f"incompatible shapes {A.shape} and {B.shape}")
    AB = matmul(A, B)
    bad = any(v % 2 for v in AB.flat) if mode == MOD2 else not is_zero(AB)
    if bad:
        raise NotAComplexError("A @ B != 0: not a chain complex")


@dataclass
class HomologyBasis:
    """``ker A / im B`` together with a canonical basis.

    ``generators`` are cycles (lists of length ``n``) representing the
    canonical generators of ``group``.  :meth:`coordinates` expresses any
    cycle in that basis.
    """

    group: FgAbelianGroup
    generators: list[list[int]]
    mode: str
    n: int
    _kernel_inv: np.ndarray | None = None   # maps a cycle to kernel coordinates
    _kernel_rank: int = 0
    _U: np.ndarray | None = None
    _keep: list[int] | None = None
    _orders: list[int] | None = None
    _mod2_basis: list[list[int]] | None = None
    _mod2_nb: int = 0

    def coordinates(self, cycle: Sequence[int]) -> tuple[int, ...]:
        """Canonical coordinates of a cycle; raises if ``cycle`` is not one."""
        cycle = [int(c) for c in cycle]
        if len(cycle) != self.n:
            raise ValueError("cycle has wrong length")
        if self.mode == MOD2:
            x = _solve_mod2(self._mod2_basis, cycle)
            if x is None:
                raise ChainMapError("vector is not a cycle")
            return tuple(x[self._mod2_nb:])
        full = [sum(int(self._kernel_inv[i, j]) * cycle[j] for j in range(self.n))
                for i in range(self.n)]
        r = self.n - self._kernel_rank
        if any(full[i] for i in range(r)):
            raise ChainMapError("vector is not a cycle")
        y = full[r:]
        yy = [sum(int(self._U[i, j]) * y[j] for j in range(len(y))) for i in range(len(y))]
        return reduce_coords([yy[i] for i in self._keep], self._orders)

    def is_boundary(self, cycle: Sequence[int]) -> bool:
        return not any(self.coordinates(cycle))


def homology_basis(A, B, mode: str = INTEGER, n: int | None = None) -> HomologyBasis:
    """Compute ``ker A / im B`` with its canonical basis.

    ``A`` is ``∂_k`` (shape ``m x n``) and ``B`` is ``∂_{k+1}`` (``n x l``).
    ``n`` fixes the number of generators when both matrices are empty.
    """
    if mode not in MODES:
        raise ValueError(f"unknown coefficient mode {mode!r}")
    A = as_matrix(A)
    B = as_matrix(B)
    if n is None:
        n = A.shape[1] if A.shape[1] or not B.shape[0] else B.shape[0]
    if A.shape[1] != n:
        A = zeros(0, n) if A.size == 0 else A
    if B.shape[0] != n:
        B = zeros(n, 0) if B.size == 0 else B
    _check_pair(A, B, mode)

    if mode == MOD2:
        ker = _kernel_mod2(A)
        img_rows, _ = _rref_mod2([list(col) for col in _to_lists(B.T)], n)
        basis = [list(r) for r in img_rows]
        nb = len(basis)
        gens = []
        for v in ker:
            if _solve_mod2(basis + gens, v) is None:
                gens.append(v)
        return HomologyBasis(FgAbelianGroup(len(gens)), gens, MOD2, n,
                             _mod2_basis=basis + gens, _mod2_nb=nb)

    sa = smith_decomposition(A)
    r = sa.rank
    K = sa.V[:, r:]                       # saturated kernel basis, n x (n-r)
    kr = n - r
    # B = K C with C = (V^-1 B)[r:]
    C = matmul(sa.V_inv, B)[r:, :] if kr else zeros(0, B.shape[1])
    sc = smith_decomposition(C) if kr else None
    diag = sc.diagonal if sc else []
    diag = diag + [0] * (kr - len(diag))
    tors = [i for i, d in enumerate(diag) if d > 1]
    free = [i for i, d in enumerate(diag) if d == 0]
    keep = tors + free
    orders = [diag[i] for i in keep]
    if kr:
        Kp = matmul(K, sc.U_inv)
        gens = [[int(Kp[row, i]) for row in range(n)] for i in keep]
        U = sc.U
    else:
        gens, U = [], identity(0)
    group = FgAbelianGroup(len(free), tuple(diag[i] for i in tors))
    return HomologyBasis(group, gens, INTEGER, n, _kernel_inv=sa.V_inv,
                         _kernel_rank=kr, _U=U, _keep=keep, _orders=orders)


def homology_of_pair(A, B, mode: str = INTEGER, n: int | None = None) -> FgAbelianGroup:
    """Isomorphism type of ``ker A / im B``.

    In ``z2`` mode the result is a vector space over the two-element field,
    reported as ``free_rank`` with empty torsion.
    """
    return homology_basis(A, B, mode, n).group


def induced_quotient_map(f, source: HomologyBasis, target: HomologyBasis,
                         source_boundaries=None) -> GroupMorphism:
    """Map on homology induced by the chain-level matrix ``f``.

    ``f`` has shape ``target.n x source.n``.  Cycles must map to cycles and,
    when ``source_boundaries`` (the matrix ``B`` of the source) is given,
    boundaries must map to boundaries; otherwise :class:`ChainMapError`.
    """
    f = as_matrix(f, rows=target.n, cols=source.n) if source.n and target.n \
        else zeros(target.n, source.n)
    if source.mode != target.mode:
        raise ValueError("coefficient modes differ")

    def apply(vec):
        return [sum(int(f[i, j]) * int(vec[j]) for j in range(source.n)) for i in range(target.n)]

    if source_boundaries is not None:
        Bs = as_matrix(source_boundaries)
        for j in range(Bs.shape[1]):
            img = apply(Bs[:, j])
            try:
                ok = target.is_boundary(img)
            except ChainMapError:
                ok = False
            if not ok:
                raise ChainMapError(f"boundary column {j} does not map to a boundary")
    cols = []
    for g in source.generators:
        try:
            cols.append(target.coordinates(apply(g)))
        except ChainMapError as exc:
            raise ChainMapError("a cycle does not map to a cycle") from exc
    M = zeros(target.group.ngens, source.group.ngens)
    for j, c in enumerate(cols):
        for i, v in enumerate(c):
            M[i, j] = v
    return GroupMorphism(source.group, target.group, M)


class Cokernel:
    """``Z^n / R Z^m`` with a membership test and canonical coordinates."""

    def __init__(self, R, n: int | None = None):
        R = as_matrix(R) if len(R) else zeros(n or 0, 0)
        if n is not None and R.shape[0] != n:
            raise ValueError("relation matrix has wrong row count")
        self.n = R.shape[0]
        s = smith_decomposition(R)
        diag = s.diagonal + [0] * (self.n - len(s.diagonal))
        self._U = s.U
        self._U_inv = s.U_inv
        self._keep = [i for i, d in enumerate(diag) if d != 1]
        self._orders = [diag[i] for i in self._keep]
        nz = [d for d in diag if d != 0]
        self.group = FgAbelianGroup(self.n - len(nz), tuple(d for d in nz if d > 1))

    def coordinates(self, vec: Sequence[int]) -> tuple[int, ...]:
        y = [sum(int(self._U[i, j]) * int(vec[j]) for j in range(self.n)) for i in range(self.n)]
        return reduce_coords([y[i] for i in self._keep], self._orders)

    def is_zero(self, vec: Sequence[int]) -> bool:
        return not any(self.coordinates(vec))

    def representative(self, t: int) -> list[int]:
        """A vector in ``Z^n`` representing canonical generator ``t``."""
        col = self._keep[t]
        return [int(self._U_inv[i, col]) for i in range(self.n)]


def gcd_list(values) -> int:
    g = 0
    for v in values:
        g = gcd(g, int(v))
    return g
