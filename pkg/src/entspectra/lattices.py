"""Exact integer/rational lattice helpers.

Three small tools back every homology-flavored computation here:

* RowReducer      -- incremental integer row reduction (Hermite-style) with
                     canonical residues, used for exact membership tests and
                     coset identifiers modulo a relator lattice.
* QProjection     -- sparse reduced row echelon over Q; its residual
                     coordinates give a *linear* projection onto the quotient
                     vector space, used for rank bookkeeping in scale scans.
* RankTracker     -- tiny incremental Gaussian elimination over Q.

Smith normal form for presentation abelianizations lives here too: a sparse
unit-pivot sweep first, sympy on the small residual matrix after.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

__all__ = ["RowReducer", "QProjection", "RankTracker", "smith_invariants"]

SparseVec = Dict[int, int]


def _addmul(target: SparseVec, other: SparseVec, c: int):
    if c == 0:
        return
    for k, v in other.items():
        nv = target.get(k, 0) + c * v
        if nv:
            target[k] = nv
        else:
            target.pop(k, None)


def _bezout(a: int, b: int, g: int) -> Tuple[int, int]:
    """x, y with a*x + b*y = g = gcd(a, b); g is passed in to fix the sign."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r == g:
        return old_s, old_t
    return -old_s, -old_t


class RowReducer:
    """Integer row lattice in echelon form with canonical coset residues.

    Rows are sparse dicts {column: int}. Invariants: each stored row's
    smallest-support column is its pivot, pivot entries are positive, and no
    two rows share a pivot column. Echelon alone makes reduce() canonical:
    a lattice element whose pivot-column coordinates all lie in [0, pivot)
    must be zero, so each coset has exactly one representative of that shape.
    """

    def __init__(self, rows: Optional[Iterable[SparseVec]] = None):
        self.pivot_rows: Dict[int, SparseVec] = {}
        self._sorted_cols: List[int] = []
        self._dirty = False
        if rows is not None:
            for r in rows:
                self.add(r)

    def _cols(self) -> List[int]:
        if self._dirty:
            self._sorted_cols = sorted(self.pivot_rows)
            self._dirty = False
        return self._sorted_cols

    def reduce(self, vec: SparseVec) -> SparseVec:
        """Canonical residue of vec modulo the row lattice.

        Processing pivot columns in ascending order suffices: echelon rows
        have no support left of their pivot, so a cleared column stays put.
        """
        work = {k: v for k, v in vec.items() if v}
        for c in self._cols():
            val = work.get(c, 0)
            if val:
                row = self.pivot_rows[c]
                q = val // row[c]
                if q:
                    _addmul(work, row, -q)
        return work

    def add(self, vec: SparseVec) -> bool:
        """Insert a generator; returns True when the lattice actually grew."""
        work = {k: v for k, v in vec.items() if v}
        grew = False
        while work:
            c = min(work)
            row = self.pivot_rows.get(c)
            v = work[c]
            if row is None:
                if v < 0:
                    work = {k: -x for k, x in work.items()}
                self.pivot_rows[c] = work
                self._dirty = True
                return True
            p = row[c]
            if v % p == 0:
                _addmul(work, row, -(v // p))
                continue
            g = gcd(p, v)
            x, y = _bezout(p, v, g)
            new_row: SparseVec = {}
            _addmul(new_row, row, x)
            _addmul(new_row, work, y)
            rem: SparseVec = {}
            _addmul(rem, row, v // g)
            _addmul(rem, work, -(p // g))
            assert new_row.get(c) == g
            self.pivot_rows[c] = new_row
            grew = True
            work = rem
        return grew

    def contains(self, vec: SparseVec) -> bool:
        return not self.reduce(vec)

    def rank(self) -> int:
        return len(self.pivot_rows)

    def residue_key(self, vec: SparseVec) -> Tuple[Tuple[int, int], ...]:
        """Hashable canonical form of the coset of vec."""
        return tuple(sorted(self.reduce(vec).items()))


class QProjection:
    """Reduced row echelon form over Q for a fixed generating set.

    project(vec) returns vec's coordinates on the non-pivot columns after
    eliminating the row space: a linear map that vanishes exactly on the
    span. Pre-tabulated unit projections make project_fast O(support).
    """

    def __init__(self, rows: Iterable[SparseVec], ncols: int):
        self.ncols = ncols
        self.pivots: Dict[int, Dict[int, Fraction]] = {}
        for row in rows:
            self._insert({c: Fraction(v) for c, v in row.items() if v})
        self.free_cols: List[int] = [c for c in range(ncols) if c not in self.pivots]
        self._free_index = {c: i for i, c in enumerate(self.free_cols)}
        self._unit_proj: Dict[int, Tuple[Fraction, ...]] = {}

    def _eliminate(self, vec: Dict[int, Fraction]) -> Dict[int, Fraction]:
        # RREF rows are supported on their pivot plus non-pivot columns only,
        # so one pass over a key snapshot reaches a fixed point.
        for c in sorted(vec):
            coef = vec.get(c)
            if not coef:
                continue
            row = self.pivots.get(c)
            if row is None:
                continue
            for k, v in row.items():
                nv = vec.get(k, Fraction(0)) - coef * v
                if nv:
                    vec[k] = nv
                else:
                    vec.pop(k, None)
        return {k: v for k, v in vec.items() if v}

    def _insert(self, vec: Dict[int, Fraction]):
        vec = self._eliminate(vec)
        if not vec:
            return
        c = min(vec)
        inv = 1 / vec[c]
        row = {k: v * inv for k, v in vec.items()}
        for other in self.pivots.values():
            coef = other.get(c)
            if coef:
                for k, v in row.items():
                    nv = other.get(k, Fraction(0)) - coef * v
                    if nv:
                        other[k] = nv
                    else:
                        other.pop(k, None)
        self.pivots[c] = row

    def rank(self) -> int:
        return len(self.pivots)

    def project(self, vec: SparseVec) -> Tuple[Fraction, ...]:
        """Coordinates of vec in Q^ncols / rowspan, on the free columns."""
        out = [Fraction(0)] * len(self.free_cols)
        for c, coef in vec.items():
            if not coef:
                continue
            fi = self._free_index.get(c)
            if fi is not None:
                out[fi] += coef
                continue
            row = self.pivots[c]
            for k, v in row.items():
                if k == c:
                    continue
                fi = self._free_index.get(k)
                if fi is None:
                    raise AssertionError("RREF row supported on another pivot column")
                out[fi] -= coef * v
        return tuple(out)

    def unit_projection(self, col: int) -> Tuple[Fraction, ...]:
        cached = self._unit_proj.get(col)
        if cached is None:
            cached = self.project({col: 1})
            self._unit_proj[col] = cached
        return cached

    def project_fast(self, vec: SparseVec) -> Tuple[Fraction, ...]:
        out = [Fraction(0)] * len(self.free_cols)
        for c, coef in vec.items():
            if not coef:
                continue
            unit = self.unit_projection(c)
            for i, u in enumerate(unit):
                if u:
                    out[i] += coef * u
        return tuple(out)


class RankTracker:
    """Incremental rank of a growing family of small rational vectors."""

    def __init__(self, dim: int):
        self.dim = dim
        self.basis: List[Tuple[Fraction, ...]] = []
        self.pivot_cols: List[int] = []

    def residual(self, vec: Sequence[Fraction]) -> Optional[Tuple[Fraction, ...]]:
        v = list(vec)
        for row, pc in zip(self.basis, self.pivot_cols):
            coef = v[pc]
            if coef:
                for i in range(self.dim):
                    v[i] -= coef * row[i]
        if any(v):
            return tuple(v)
        return None

    def add(self, vec: Sequence[Fraction]) -> bool:
        """Insert; True when the vector enlarged the span."""
        res = self.residual(vec)
        if res is None:
            return False
        pc = next(i for i, x in enumerate(res) if x)
        inv = 1 / res[pc]
        row = tuple(x * inv for x in res)
        self.basis.append(row)
        self.pivot_cols.append(pc)
        return True

    def rank(self) -> int:
        return len(self.basis)

    def contains(self, vec: Sequence[Fraction]) -> bool:
        return self.residual(vec) is None

    def copy(self) -> "RankTracker":
        dup = RankTracker(self.dim)
        dup.basis = list(self.basis)
        dup.pivot_cols = list(self.pivot_cols)
        return dup


def smith_invariants(rows: Iterable[SparseVec], ncols: int) -> Tuple[int, List[int]]:
    """(rank, nontrivial invariant factors) of the integer matrix given by rows.

    Unit pivots are eliminated sparsely first (each contributes an invariant
    factor of 1 and leaves the rest of the Smith form unchanged); sympy
    finishes the dense residual, which is tiny in practice.
    """
    work: List[SparseVec] = [dict(r) for r in rows if r]
    rank = 0
    while True:
        best = None
        for ri, row in enumerate(work):
            for c, v in row.items():
                if v in (1, -1):
                    key = (len(row), ri, c)
                    if best is None or key < best:
                        best = key
        if best is None:
            break
        _, ri, c = best
        row = work[ri]
        if row[c] == -1:
            row = {k: -v for k, v in row.items()}
        for rj, other in enumerate(work):
            if rj != ri:
                coef = other.get(c)
                if coef:
                    _addmul(other, row, -coef)
        work[ri] = {}
        for other in work:
            other.pop(c, None)
        work = [r for r in work if r]
        rank += 1
    if not work:
        return rank, []
    from sympy import Matrix
    from sympy.matrices.normalforms import smith_normal_form

    cols = sorted({c for r in work for c in r})
    col_index = {c: i for i, c in enumerate(cols)}
    dense = [[0] * len(cols) for _ in work]
    for i, r in enumerate(work):
        for c, v in r.items():
            dense[i][col_index[c]] = v
    snf = smith_normal_form(Matrix(dense))
    diag = [int(snf[i, i]) for i in range(min(snf.rows, snf.cols))]
    nonzero = [abs(d) for d in diag if d != 0]
    rank += len(nonzero)
    torsion = [f for f in nonzero if f != 1]
    return rank, torsion
