"""Exact rational linear algebra on the stoichiometric structure.

All rank and kernel decisions are made with ``fractions.Fraction`` so that
vertex/facet classification never depends on a floating point tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Sequence

import numpy as np

from .model import ReactionNetwork

Vector = tuple[Fraction, ...]


# -- generic exact helpers ---------------------------------------------------

def rref(rows: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over the rationals.

    Returns the reduced rows (zero rows dropped) and the pivot columns.
    """
    m = [[Fraction(x) for x in row] for row in rows]
    if not m:
        return [], []
    ncols = len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        p = m[r][c]
        if p != 1:
            m[r] = [x / p for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(rows: Sequence[Sequence]) -> int:
    return len(rref(rows)[1])


def nullspace(rows: Sequence[Sequence], ncols: int | None = None) -> list[Vector]:
    """Basis of {x : A x = 0}, one primitive integer vector per free column."""
    if ncols is None:
        ncols = len(rows[0]) if len(rows) else 0
    red, pivots = rref(rows) if len(rows) else ([], [])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, pc in zip(red, pivots):
            v[pc] = -row[f]
        basis.append(primitive(v))
    return basis


def primitive(v: Iterable) -> Vector:
    """Scale a rational vector to coprime integers (first nonzero entry > 0)."""
    v = [Fraction(x) for x in v]
    nz = [x for x in v if x != 0]
    if not nz:
        return tuple(v)
    den = lcm(*(x.denominator for x in nz))
    ints = [int(x * den) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, x)
    sign = 1 if next(x for x in ints if x != 0) > 0 else -1
    return tuple(Fraction(sign * x // g) for x in ints)


def fraction_str(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


# -- stoichiometric objects ---------------------------------------------------

@dataclass(frozen=True)
class StoichMatrix:
    """n x r integer matrix; column i is product minus reactant of reaction i."""

    entries: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def r(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    @property
    def columns(self) -> list[tuple[int, ...]]:
        return [tuple(row[i] for row in self.entries) for i in range(self.r)]

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64).reshape(self.n, self.r)


@dataclass(frozen=True)
class SubspaceBasis:
    vectors: tuple[Vector, ...]
    n: int

    @property
    def dim(self) -> int:
        return len(self.vectors)

    def as_strings(self) -> list[list[str]]:
        return [[fraction_str(x) for x in v] for v in self.vectors]

    def as_array(self) -> np.ndarray:
        return np.array([[float(x) for x in v] for v in self.vectors], dtype=float).reshape(self.dim, self.n)


def stoich_matrix(net: ReactionNetwork, reactions: Iterable[int] | None = None) -> StoichMatrix:
    """Stoichiometric matrix, optionally restricted to a subset of reactions."""
    idx = range(net.r) if reactions is None else sorted(reactions)
    cols = [net.reactions[i].product.vector(net.n) - net.reactions[i].reactant.vector(net.n) for i in idx]
    entries = tuple(tuple(int(c[j]) for c in cols) for j in range(net.n))
    return StoichMatrix(entries)


def subspace_basis(m: StoichMatrix) -> SubspaceBasis:
    """Basis of the column space, taken from the pivot columns of ``m``."""
    if m.r == 0:
        return SubspaceBasis((), m.n)
    _, pivots = rref(m.entries)
    cols = m.columns
    return SubspaceBasis(tuple(tuple(Fraction(x) for x in cols[c]) for c in pivots), m.n)


def conservation_basis(m: StoichMatrix) -> SubspaceBasis:
    """Basis of the orthogonal complement (left kernel of ``m``)."""
    if m.r == 0:
        vecs = [tuple(Fraction(int(i == j)) for j in range(m.n)) for i in range(m.n)]
        return SubspaceBasis(tuple(vecs), m.n)
    return SubspaceBasis(tuple(nullspace(m.columns, m.n)), m.n)


def _face_kernel_from_basis(basis: Sequence[Vector], members: Iterable[int]) -> list[Vector]:
    members = sorted(members)
    if not basis:
        return []
    if not members:
        return [tuple(v) for v in basis]
    # coefficients c with sum_k c_k b_k vanishing on every member coordinate
    constraint = [[b[j] for b in basis] for j in members]
    coeffs = nullspace(constraint, len(basis))
    n = len(basis[0])
    out = []
    for c in coeffs:
        v = [sum(ck * b[j] for ck, b in zip(c, basis)) for j in range(n)]
        out.append(primitive(v))
    return out


def face_kernel(net: ReactionNetwork, members: Iterable[int | str], reactions: Iterable[int] | None = None) -> list[Vector]:
    """Basis of {v in S : v_j = 0 for every species j in ``members``}."""
    w = net.resolve(members)
    basis = subspace_basis(stoich_matrix(net, reactions)).vectors
    return _face_kernel_from_basis(basis, w)


def face_dimension(net: ReactionNetwork, members: Iterable[int | str], reactions: Iterable[int] | None = None) -> int:
    """dim of the stoichiometric subspace intersected with ker(pi_W).

    This is the dimension of the boundary face of a compatibility class
    where every species of W vanishes.  ``reactions`` restricts the
    subspace to a subset of reactions (a subnetwork).
    """
    w = net.resolve(members)
    basis = subspace_basis(stoich_matrix(net, reactions)).vectors
    if not w:
        return len(basis)
    return len(basis) - rank([[b[j] for b in basis] for j in sorted(w)]) if basis else 0


def projected_dimension(net: ReactionNetwork, members: Iterable[int | str], reactions: Iterable[int] | None = None) -> int:
    """dim pi_W(S): rank of the stoichiometric columns restricted to W rows."""
    w = sorted(net.resolve(members))
    m = stoich_matrix(net, reactions)
    if not w or m.r == 0:
        return 0
    return rank([m.entries[j] for j in w])


def _phase_one(a_rows: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    """Exact phase-one simplex: some x >= 0 with A x = b, or None.

    Rows of A must be linearly independent.  Bland's rule keeps it finite.
    """
    m, n = len(a_rows), len(a_rows[0])
    rows = []
    for row, rhs in zip(a_rows, b):
        if rhs < 0:
            row, rhs = [-x for x in row], -rhs
        rows.append(list(row) + [Fraction(0)] * m + [rhs])
    for i in range(m):
        rows[i][n + i] = Fraction(1)
    basis = [n + i for i in range(m)]
    # reduced costs of the auxiliary objective (sum of artificials)
    cost = [-sum(rows[i][j] for i in range(m)) for j in range(n + m + 1)]
    for j in range(n, n + m):
        cost[j] = Fraction(0)
    while True:
        enter = next((j for j in range(n + m) if cost[j] < 0), None)
        if enter is None:
            break
        ratios = [(rows[i][-1] / rows[i][enter], basis[i], i) for i in range(m) if rows[i][enter] > 0]
        _, _, leave = min(ratios)
        piv = rows[leave][enter]
        rows[leave] = [x / piv for x in rows[leave]]
        for i in range(m):
            if i != leave and rows[i][enter] != 0:
                f = rows[i][enter]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[leave])]
        f = cost[enter]
        cost = [x - f * y for x, y in zip(cost, rows[leave])]
        basis[leave] = enter
    if -cost[-1] != 0:
        return None
    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = rows[i][-1]
    return x


def has_nonnegative_conservation(m: StoichMatrix) -> tuple[bool, Vector | None]:
    """Look for a nonzero a >= 0 with a . column = 0 for every column.

    Solved as an exact rational feasibility problem (a >= 0, sum a = 1).
    The returned witness is scaled to coprime integers.
    """
    n = m.n
    if n == 0:
        return False, None
    aug = [list(col) + [0] for col in m.columns] + [[1] * n + [1]]
    red, pivots = rref(aug)
    if n in pivots:
        return False, None
    x = _phase_one([row[:n] for row in red], [row[n] for row in red])
    if x is None:
        return False, None
    return True, primitive(x)
