"""Entourage algebra on finite metric spaces.

An entourage is a reflexive symmetric relation on the vertex set, stored as a
dense boolean matrix. Metric entourages come in a strict ({d < eps}) and a
closed ({d <= eps}) flavor; on a finite space that pair is exactly the
open/closure distinction used by criticality tests.
"""

from __future__ import annotations

from collections import deque
from fractions import Fraction
from math import inf
from typing import Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import BadVertex, MixedSpaces, NonpositiveEps
from .space import FiniteMetricSpace, _as_fraction

__all__ = [
    "Entourage",
    "metric_entourage",
    "base_entourage",
    "full_entourage",
    "identity_entourage",
    "custom_entourage",
    "compose",
    "union",
    "intersection",
    "sigma",
    "ball",
    "is_chained",
    "ChainednessResult",
    "is_subset",
]


class Entourage:
    """Reflexive symmetric relation bound to a FiniteMetricSpace.

    `strictness` records metric provenance ('open' for {d < eps}, 'closed'
    otherwise); `provenance` is a nested tuple describing how the relation
    was built, used for reporting and deterministic family descriptors.
    """

    __slots__ = ("space", "relation", "strictness", "provenance")

    def __init__(self, space: FiniteMetricSpace, relation: np.ndarray,
                 strictness: str = "closed", provenance=("custom",)):
        relation = np.asarray(relation, dtype=bool)
        n = space.n
        if relation.shape != (n, n):
            raise MixedSpaces(f"relation shape {relation.shape} does not match n={n}")
        if not relation[np.diag_indices(n)].all():
            raise MixedSpaces("relation must be reflexive")
        if not np.array_equal(relation, relation.T):
            raise MixedSpaces("relation must be symmetric")
        relation.setflags(write=False)
        self.space = space
        self.relation = relation
        self.strictness = strictness
        self.provenance = provenance

    def __contains__(self, pair: Tuple[int, int]) -> bool:
        i, j = pair
        return bool(self.relation[i, j])

    def __eq__(self, other) -> bool:
        return (isinstance(other, Entourage) and other.space is self.space
                and np.array_equal(self.relation, other.relation))

    def __hash__(self):
        return hash((id(self.space), self.relation.tobytes()))

    def edges(self) -> Iterator[Tuple[int, int]]:
        """Off-diagonal related pairs (i, j) with i < j, lexicographic."""
        iu, ju = np.triu_indices(self.space.n, k=1)
        mask = self.relation[iu, ju]
        for i, j in zip(iu[mask], ju[mask]):
            yield int(i), int(j)

    def edge_count(self) -> int:
        n = self.space.n
        return int((self.relation.sum() - n) // 2)

    def neighbors(self, x: int) -> List[int]:
        return [int(v) for v in np.flatnonzero(self.relation[x])]

    def describe(self) -> str:
        kind = self.provenance[0]
        if kind == "metric":
            eps, strict = self.provenance[1], self.provenance[2]
            return f"{'strict' if strict else 'closed'}:{eps}"
        if kind == "union":
            return "union(" + ",".join(self.provenance[1]) + ")"
        if kind == "compose":
            return f"compose({self.provenance[1]},{self.provenance[2]})"
        return kind

    def __repr__(self):
        return f"Entourage({self.describe()} on {self.space.description})"


_metric_cache: dict = {}


def metric_entourage(space: FiniteMetricSpace, eps, strict: bool) -> Entourage:
    """{(x,y): d(x,y) < eps} when strict, {(x,y): d(x,y) <= eps} otherwise."""
    eps = _as_fraction(eps)
    if eps <= 0:
        raise NonpositiveEps(eps)
    key = (id(space), eps, strict)
    cached = _metric_cache.get(key)
    if cached is not None and cached.space is space:
        return cached
    n = space.n
    rel = np.empty((n, n), dtype=bool)
    for i in range(n):
        row = space.dist[i]
        if strict:
            rel[i] = [d < eps for d in row]
        else:
            rel[i] = [d <= eps for d in row]
    ent = Entourage(space, rel, strictness="open" if strict else "closed",
                    provenance=("metric", eps, strict))
    if len(_metric_cache) > 4096:
        _metric_cache.clear()
    _metric_cache[key] = ent
    return ent


def base_entourage(space: FiniteMetricSpace) -> Entourage:
    """The finest connectivity entourage: closed metric at the base scale."""
    if space.n == 1:
        return full_entourage(space)
    return metric_entourage(space, space.base_scale, strict=False)


def full_entourage(space: FiniteMetricSpace) -> Entourage:
    return Entourage(space, np.ones((space.n, space.n), dtype=bool),
                     strictness="closed", provenance=("full",))


def identity_entourage(space: FiniteMetricSpace) -> Entourage:
    return Entourage(space, np.eye(space.n, dtype=bool),
                     strictness="closed", provenance=("identity",))


def custom_entourage(space: FiniteMetricSpace, pairs: Iterable[Tuple[int, int]],
                     strictness: str = "closed") -> Entourage:
    """Symmetrize the given pairs, add the diagonal, record custom provenance."""
    n = space.n
    rel = np.eye(n, dtype=bool)
    for (i, j) in pairs:
        if not (0 <= i < n and 0 <= j < n):
            raise BadVertex(max(i, j), n)
        rel[i, j] = True
        rel[j, i] = True
    return Entourage(space, rel, strictness=strictness, provenance=("custom",))


def compose(E: Entourage, k: int) -> Entourage:
    """Pairs joinable by an E-chain of at most k steps (boolean matrix power)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    k = min(k, E.space.n)  # reachability stabilizes at n
    result = _power(E.relation, k)
    return Entourage(E.space, result, strictness=E.strictness,
                     provenance=("compose", E.describe(), k))


def _power(rel: np.ndarray, k: int) -> np.ndarray:
    """Boolean k-th matrix power; for a reflexive relation this is exactly
    the "joinable in at most k steps" relation."""
    acc = None
    base = rel
    e = k
    while e:
        if e & 1:
            acc = base.copy() if acc is None else ((acc.astype(np.uint8) @ base.astype(np.uint8)) > 0)
        e >>= 1
        if e:
            u = base.astype(np.uint8)
            base = (u @ u) > 0
    return acc


def union(Es: Sequence[Entourage]) -> Entourage:
    """Pointwise OR; balls of the union are unions of the balls."""
    if not Es:
        raise ValueError("union of an empty family")
    space = Es[0].space
    for E in Es[1:]:
        if E.space is not space:
            raise MixedSpaces("union inputs bound to different spaces")
    rel = np.zeros((space.n, space.n), dtype=bool)
    for E in Es:
        rel |= E.relation
    strictness = "open" if all(E.strictness == "open" for E in Es) else "closed"
    return Entourage(space, rel, strictness=strictness,
                     provenance=("union", tuple(E.describe() for E in Es)))


def intersection(E: Entourage, F: Entourage) -> Entourage:
    if E.space is not F.space:
        raise MixedSpaces("intersection inputs bound to different spaces")
    return Entourage(E.space, E.relation & F.relation, strictness="closed",
                     provenance=("intersection", E.describe(), F.describe()))


def sigma(E: Entourage):
    """sup of eps with {d < eps} contained in E; inf (unbounded) on the full relation.

    The sup is attained at the smallest realized distance value carrying a
    pair outside E, since strict metric entourages only change at realized
    values.
    """
    space = E.space
    missing = [space.dist[i][j]
               for i in range(space.n) for j in range(i + 1, space.n)
               if not E.relation[i, j]]
    if not missing:
        return inf
    return min(missing)


def ball(E: Entourage, x: int) -> frozenset:
    if not (0 <= x < E.space.n):
        raise BadVertex(x, E.space.n)
    return frozenset(int(v) for v in np.flatnonzero(E.relation[x]))


class ChainednessResult(NamedTuple):
    ok: bool
    witness: Optional[Tuple[int, int]]

    def __bool__(self):
        return self.ok


def is_chained(E: Entourage) -> ChainednessResult:
    """Discrete chainedness test.

    For every related pair (x, y), x and y must be joined inside
    ball(x,E) & ball(y,E) by edges of the base entourage (the finest closed
    metric entourage). The continuum closure-of-interior condition is vacuous
    on finite spaces and is not checked.
    """
    space = E.space
    base = base_entourage(E.space).relation if space.n > 1 else E.relation
    rel = E.relation
    n = space.n
    for x in range(n):
        row_x = rel[x]
        for y in range(x + 1, n):
            if not row_x[y]:
                continue
            allowed = row_x & rel[y]
            if not _connected_within(base, allowed, x, y):
                return ChainednessResult(False, (x, y))
    return ChainednessResult(True, None)


def _connected_within(base: np.ndarray, allowed: np.ndarray, x: int, y: int) -> bool:
    if not (allowed[x] and allowed[y]):
        return False
    seen = np.zeros(len(allowed), dtype=bool)
    seen[x] = True
    queue = deque([x])
    while queue:
        u = queue.popleft()
        if u == y:
            return True
        nxt = base[u] & allowed & ~seen
        for v in np.flatnonzero(nxt):
            seen[v] = True
            queue.append(int(v))
    return bool(seen[y])


def is_subset(E: Entourage, F: Entourage) -> bool:
    if E.space is not F.space:
        raise MixedSpaces("subset test across different spaces")
    return bool(np.all(F.relation | ~E.relation))


def connected_under(E: Entourage, start: int = 0) -> bool:
    """True when every vertex is reachable from `start` along E-edges."""
    n = E.space.n
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    queue = deque([start])
    while queue:
        u = queue.popleft()
        nxt = E.relation[u] & ~seen
        for v in np.flatnonzero(nxt):
            seen[v] = True
            queue.append(int(v))
    return bool(seen.all())
