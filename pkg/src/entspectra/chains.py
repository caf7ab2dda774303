"""E-chains, basic homotopy moves, and replayable move certificates.

A MoveSequence is the universal positive certificate: replaying it from its
start chain must stay legal at every step and land exactly on its end chain.
Endpoints are never touched by any move.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .entourage import Entourage, is_chained, is_subset, metric_entourage
from .errors import (
    BadParams,
    EndpointMismatch,
    EndpointRemoval,
    EntourageTooSmall,
    IllegalMove,
    NotChained,
    PreconditionViolated,
    StepNotInEntourage,
)
from .space import _as_fraction

__all__ = [
    "Chain",
    "Move",
    "MoveSequence",
    "validate_chain",
    "apply_move",
    "concat",
    "reverse",
    "normalize",
    "refine",
    "close_homotopy",
    "is_constant",
]


@dataclass(frozen=True)
class Chain:
    """Vertex sequence certified against an entourage.

    nu() is the step count, length() the summed step distances.
    """

    points: Tuple[int, ...]
    entourage: Entourage

    def nu(self) -> int:
        return len(self.points) - 1

    def length(self) -> Fraction:
        d = self.entourage.space.dist
        return sum((d[a][b] for a, b in zip(self.points, self.points[1:])),
                   Fraction(0))

    def is_loop(self) -> bool:
        return self.points[0] == self.points[-1]

    def __repr__(self):
        pts = ",".join(map(str, self.points[:8]))
        more = "..." if len(self.points) > 8 else ""
        return f"Chain([{pts}{more}], nu={self.nu()})"


def is_constant(points: Sequence[int]) -> bool:
    return all(p == points[0] for p in points)


def validate_chain(E: Entourage, points: Sequence[int]) -> Chain:
    """Certify a vertex sequence as an E-chain or raise StepNotInEntourage."""
    points = tuple(int(p) for p in points)
    if not points:
        raise ValueError("chain needs at least one point")
    rel = E.relation
    n = E.space.n
    for p in points:
        if not (0 <= p < n):
            raise StepNotInEntourage(-1, (p, p))
    for i, (a, b) in enumerate(zip(points, points[1:])):
        if not rel[a, b]:
            raise StepNotInEntourage(i, (a, b))
    return Chain(points, E)


@dataclass(frozen=True)
class Move:
    """Insert(pos, vertex) places vertex between positions pos-1 and pos;
    Remove(pos) deletes the interior point at pos."""

    op: str  # "insert" | "remove"
    pos: int
    vertex: Optional[int] = None

    def to_json(self) -> dict:
        if self.op == "insert":
            return {"op": "insert", "pos": self.pos, "vertex": self.vertex}
        return {"op": "remove", "pos": self.pos}

    @staticmethod
    def from_json(obj: dict) -> "Move":
        if obj["op"] == "insert":
            return Move("insert", int(obj["pos"]), int(obj["vertex"]))
        if obj["op"] == "remove":
            return Move("remove", int(obj["pos"]))
        raise ValueError(f"unknown move op {obj.get('op')!r}")


def apply_move(chain: Chain, move: Move) -> Chain:
    """Apply one basic move, checking legality against the chain's entourage."""
    pts = chain.points
    rel = chain.entourage.relation
    if move.op == "insert":
        if not (1 <= move.pos <= len(pts) - 1):
            raise IllegalMove(f"insert position {move.pos} not between consecutive points")
        x = move.vertex
        a, b = pts[move.pos - 1], pts[move.pos]
        if not rel[a, x]:
            raise IllegalMove(f"insert: pair ({a}, {x}) not in entourage")
        if not rel[x, b]:
            raise IllegalMove(f"insert: pair ({x}, {b}) not in entourage")
        return Chain(pts[:move.pos] + (x,) + pts[move.pos:], chain.entourage)
    if move.op == "remove":
        if move.pos in (0, len(pts) - 1):
            raise EndpointRemoval(move.pos)
        if not (0 < move.pos < len(pts) - 1):
            raise IllegalMove(f"remove position {move.pos} out of range")
        a, b = pts[move.pos - 1], pts[move.pos + 1]
        if not rel[a, b]:
            raise IllegalMove(f"remove: bridged pair ({a}, {b}) not in entourage")
        return Chain(pts[:move.pos] + pts[move.pos + 1:], chain.entourage)
    raise IllegalMove(f"unknown move op {move.op!r}")


@dataclass(frozen=True)
class MoveSequence:
    """Replayable homotopy certificate between two chains in one entourage."""

    start: Chain
    moves: Tuple[Move, ...]
    end: Chain

    def replay(self) -> Chain:
        """Re-run every move from start; raises if any move is illegal or the
        final chain differs from `end`."""
        cur = self.start
        for mv in self.moves:
            cur = apply_move(cur, mv)
        if cur.points != self.end.points:
            raise IllegalMove("replay does not reach the recorded end chain")
        if (self.start.points[0] != self.end.points[0]
                or self.start.points[-1] != self.end.points[-1]):
            raise IllegalMove("move sequence changed an endpoint")
        return cur

    def to_json(self) -> dict:
        return {
            "start": list(self.start.points),
            "moves": [m.to_json() for m in self.moves],
            "end": list(self.end.points),
        }


class _Recorder:
    """Builds a MoveSequence by applying moves as they are chosen."""

    def __init__(self, chain: Chain):
        self.start = chain
        self.current = chain
        self.moves: List[Move] = []

    def insert(self, pos: int, vertex: int):
        mv = Move("insert", pos, vertex)
        self.current = apply_move(self.current, mv)
        self.moves.append(mv)

    def remove(self, pos: int):
        mv = Move("remove", pos)
        self.current = apply_move(self.current, mv)
        self.moves.append(mv)

    def done(self) -> MoveSequence:
        return MoveSequence(self.start, tuple(self.moves), self.current)


def concat(a: Chain, b: Chain) -> Chain:
    """alpha * beta, sharing the junction point once."""
    if a.entourage != b.entourage:
        raise EndpointMismatch("concat requires the same entourage")
    if a.points[-1] != b.points[0]:
        raise EndpointMismatch(
            f"concat junction mismatch: {a.points[-1]} vs {b.points[0]}")
    return Chain(a.points + b.points[1:], a.entourage)


def reverse(a: Chain) -> Chain:
    return Chain(tuple(reversed(a.points)), a.entourage)


def normalize(chain: Chain, eps, pad_to: Optional[int] = None) -> Tuple[Chain, MoveSequence]:
    """Remove points until no two consecutive steps are both shorter than eps/2.

    Requires the strict metric entourage at eps to sit inside the chain's
    entourage, which makes every removal legal (the bridged pair is shorter
    than eps). The result satisfies nu <= floor(4 * length / eps) + 1 against
    the *original* length; pad_to appends duplicate endpoints up to an exact
    requested step count.
    """
    eps = _as_fraction(eps)
    E = chain.entourage
    if not is_subset(metric_entourage(E.space, eps, strict=True), E):
        raise EntourageTooSmall(f"strict metric entourage at {eps} exceeds the chain's entourage")
    half = eps / 2
    d = E.space.dist
    rec = _Recorder(chain)
    changed = True
    while changed:
        changed = False
        pts = rec.current.points
        for i in range(1, len(pts) - 1):
            if d[pts[i - 1]][pts[i]] < half and d[pts[i]][pts[i + 1]] < half:
                rec.remove(i)
                changed = True
                break
    if pad_to is not None:
        if pad_to < rec.current.nu():
            raise ValueError(f"cannot pad down to nu={pad_to}")
        while rec.current.nu() < pad_to:
            rec.insert(len(rec.current.points) - 1, rec.current.points[-1])
    return rec.current, rec.done()


def _constrained_shortest_path(E_sub: Entourage, allowed: frozenset,
                               x: int, y: int) -> Optional[List[int]]:
    """Shortest x->y path using E_sub edges within `allowed`.

    Ties break first on hop count then lexicographically on the vertex
    sequence, so refinements are deterministic and a direct edge always wins.
    """
    if x not in allowed or y not in allowed:
        return None
    d = E_sub.space.dist
    best: Dict[int, Tuple] = {}
    heap = [(Fraction(0), 0, (x,), x)]
    while heap:
        cost, hops, path, u = heapq.heappop(heap)
        if u in best:
            continue
        best[u] = path
        if u == y:
            return list(path)
        for v in E_sub.neighbors(u):
            if v in allowed and v not in best and v != u:
                heapq.heappush(heap, (cost + d[u][v], hops + 1, path + (v,), v))
    return None


def refine(chain: Chain, F: Entourage, _check_chained: bool = True) -> Tuple[Chain, MoveSequence]:
    """Insert an F-path inside ball(x_j, E) & ball(x_{j+1}, E) between every
    consecutive pair, producing an F-chain E-homotopic to the input.

    The move sequence inserts each gap's path points from the far end, so
    every insertion is bridged inside one E-ball and is legal in E.
    """
    E = chain.entourage
    if not is_subset(F, E):
        raise BadParams("refinement entourage must be contained in the chain's entourage")
    if _check_chained:
        check = is_chained(E)
        if not check.ok:
            raise NotChained(witness=check.witness)
    rel_F = F.relation
    rec = _Recorder(chain)
    offset = 0
    new_points: List[int] = [chain.points[0]]
    for j, (a, b) in enumerate(zip(chain.points, chain.points[1:])):
        if a == b or rel_F[a, b]:
            segment = [a, b]
        else:
            allowed = frozenset(ball_intersection(E, a, b))
            path = _constrained_shortest_path(F, allowed, a, b)
            if path is None:
                raise NotChained(witness=(a, b),
                                 message=f"no F-path joins {a} and {b} inside the E-ball intersection")
            segment = path
        interior = segment[1:-1]
        pos = j + 1 + offset
        for vertex in reversed(interior):
            rec.insert(pos, vertex)
        offset += len(interior)
        new_points.extend(segment[1:])
    refined = validate_chain(F, new_points)
    ms = rec.done()
    assert ms.end.points == tuple(new_points)
    return refined, ms


def ball_intersection(E: Entourage, a: int, b: int) -> Iterable[int]:
    row = E.relation[a] & E.relation[b]
    return [int(v) for v in np.flatnonzero(row)]


def close_homotopy(alpha: Chain, beta: Sequence[int], F: Entourage) -> MoveSequence:
    """Explicit E-homotopy from alpha to beta when both are close along F.

    Preconditions: alpha is an F-chain; beta has the same endpoints and
    length with (x_i, y_i) in F for all i; F^2 sits inside alpha's entourage;
    and beta's consecutive pairs lie in alpha's entourage (otherwise beta is
    not even an E-chain and PreconditionViolated names the first bad index).

    Emits, per interior index where the chains differ: insert a duplicate of
    x_i, insert y_i between the duplicates, remove the first copy, remove the
    second copy.
    """
    E = alpha.entourage
    beta = tuple(int(p) for p in beta)
    x = alpha.points
    if len(beta) != len(x):
        raise PreconditionViolated(-1, "beta must have the same number of points as alpha")
    if beta[0] != x[0] or beta[-1] != x[-1]:
        raise PreconditionViolated(0, "beta must share alpha's endpoints")
    rel_F = F.relation
    rel_E = E.relation
    from .entourage import compose as _compose
    if not is_subset(_compose(F, 2), E):
        raise PreconditionViolated(-1, "F^2 must be contained in alpha's entourage")
    for i, (a, b) in enumerate(zip(x, x[1:])):
        if not rel_F[a, b]:
            raise PreconditionViolated(i, f"alpha step {i} not in F")
    for i, (a, b) in enumerate(zip(x, beta)):
        if not rel_F[a, b]:
            raise PreconditionViolated(i, f"pair (x_{i}, y_{i}) not in F")
    for i, (a, b) in enumerate(zip(beta, beta[1:])):
        if not rel_E[a, b]:
            raise PreconditionViolated(i, f"beta step {i} not in alpha's entourage")

    rec = _Recorder(alpha)
    for i in range(1, len(x) - 1):
        if beta[i] == x[i]:
            continue
        # current chain: y_1 .. y_{i-1}, x_i, x_{i+1}, ..., so x_i sits at i
        rec.insert(i, x[i])       # duplicate x_i before itself
        rec.insert(i + 1, beta[i])  # y_i between the two copies
        rec.remove(i)             # first copy, bridging (y_{i-1}, y_i)
        rec.remove(i + 1)         # second copy, bridging (y_i, x_{i+1})
    ms = rec.done()
    if ms.end.points != beta:
        raise PreconditionViolated(-1, "move pattern did not reach beta")
    return ms
