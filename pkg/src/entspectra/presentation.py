"""Edge-path presentations of deck groups and certified nullity decisions.

The 2-complex of an entourage E has the E-edges as 1-cells and the E-triads
(3-cliques) as 2-cells. Basic homotopy moves on E-loops are exactly the
edge-path relations of this complex, so the deck group of the E-cover is
presented by: one generator per non-tree E-edge, one relator per triad.

decide_null runs a soundness-first cascade: free reduction (exact when there
are no relators), abelianization via the relator lattice (a nonzero residue
is a certified obstruction), then bounded breadth-first search for an
explicit contraction. Unknown is an honest outcome, never a guess.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .chains import Chain, Move, MoveSequence, apply_move, is_constant, refine, validate_chain
from .entourage import Entourage, is_chained, is_subset
from .errors import NotALoop, NotChained, NotConnected
from .lattices import RowReducer, smith_invariants
from .space import FiniteMetricSpace

__all__ = [
    "GroupPresentation",
    "NullityVerdict",
    "build_presentation",
    "loop_word",
    "chain_word",
    "word_vector",
    "h1",
    "decide_null",
    "kernel_generators",
    "DEFAULT_SEARCH_BUDGET",
]

DEFAULT_SEARCH_BUDGET = 10 ** 6


class GroupPresentation:
    """Spanning tree, generators (non-tree edges), and triad relators for one
    entourage; everything ordered deterministically."""

    def __init__(self, space: FiniteMetricSpace, entourage: Entourage,
                 tree_parent: Tuple[int, ...], generators: Tuple[Tuple[int, int], ...],
                 triads: Tuple[Tuple[int, int, int], ...], relators: Tuple[Tuple[int, ...], ...]):
        self.space = space
        self.entourage = entourage
        self.basepoint = 0
        self.tree_parent = tree_parent
        self.generators = generators
        self.triads = triads
        self.relators = relators
        self.gen_index: Dict[Tuple[int, int], int] = {e: i for i, e in enumerate(generators)}
        self._relator_reducer: Optional[RowReducer] = None
        self._depth: Optional[Tuple[int, ...]] = None

    def symbol(self, u: int, v: int) -> int:
        """Signed generator id of the step u->v; 0 for tree edges and rests."""
        if u == v:
            return 0
        a, b = (u, v) if u < v else (v, u)
        if self.tree_parent[v] == u or self.tree_parent[u] == v:
            return 0
        g = self.gen_index.get((a, b))
        if g is None:
            raise NotALoop(f"pair ({u}, {v}) is not an edge of the entourage")
        return (g + 1) if (u, v) == (a, b) else -(g + 1)

    def tree_path(self, v: int) -> Tuple[int, ...]:
        """Vertex path from the basepoint to v along spanning-tree edges."""
        path = [v]
        while path[-1] != self.basepoint:
            path.append(self.tree_parent[path[-1]])
        return tuple(reversed(path))

    def relator_reducer(self) -> RowReducer:
        if self._relator_reducer is None:
            self._relator_reducer = RowReducer(word_vector(w) for w in self.relators)
        return self._relator_reducer

    def summary(self) -> dict:
        return {
            "vertices": self.space.n,
            "edges": self.entourage.edge_count(),
            "tree_edges": self.space.n - 1,
            "generators": len(self.generators),
            "triads": len(self.triads),
        }

    def to_json(self) -> dict:
        return {
            "generators": [list(e) for e in self.generators],
            "relators": [list(w) for w in self.relators],
            "tree_parent": list(self.tree_parent),
            "basepoint": self.basepoint,
        }

    def __repr__(self):
        s = self.summary()
        return (f"GroupPresentation({s['generators']} generators, "
                f"{s['triads']} relators on {self.space.description})")


def build_presentation(space: FiniteMetricSpace, E: Entourage,
                       _check_chained: bool = True) -> GroupPresentation:
    """BFS spanning tree from vertex 0 (smallest-index tie-break), one
    generator per non-tree edge, one relator per E-triad in lexicographic
    order."""
    n = space.n
    if E.space is not space:
        raise NotConnected("entourage bound to a different space")
    if _check_chained:
        check = is_chained(E)
        if not check.ok:
            raise NotChained(witness=check.witness)
    parent = [-1] * n
    seen = [False] * n
    seen[0] = True
    order = deque([0])
    while order:
        u = order.popleft()
        for v in E.neighbors(u):
            if not seen[v]:
                seen[v] = True
                parent[v] = u
                order.append(v)
    if not all(seen):
        raise NotConnected(f"vertex {seen.index(False)} unreachable under the entourage")

    tree_edges = {(min(u, parent[u]), max(u, parent[u])) for u in range(n) if parent[u] >= 0}
    generators = tuple(e for e in E.edges() if e not in tree_edges)

    rel = E.relation
    triads: List[Tuple[int, int, int]] = []
    for a in range(n):
        row_a = rel[a]
        nbrs = [b for b in np.flatnonzero(row_a) if b > a]
        for bi, b in enumerate(nbrs):
            row_b = rel[b]
            for c in nbrs[bi + 1:]:
                if row_b[c]:
                    triads.append((a, int(b), int(c)))
    pres = GroupPresentation(space, E, tuple(parent), generators, tuple(triads), ())
    relators = []
    for (a, b, c) in triads:
        word = _free_reduce((pres.symbol(a, b), pres.symbol(b, c), pres.symbol(c, a)))
        relators.append(word)
    pres.relators = tuple(relators)
    return pres


def _free_reduce(symbols: Sequence[int]) -> Tuple[int, ...]:
    stack: List[int] = []
    for s in symbols:
        if s == 0:
            continue
        if stack and stack[-1] == -s:
            stack.pop()
        else:
            stack.append(s)
    return tuple(stack)


def chain_word(pres: GroupPresentation, points: Sequence[int]) -> Tuple[int, ...]:
    """Freely reduced generator word of any walk along entourage edges."""
    return _free_reduce([pres.symbol(u, v) for u, v in zip(points, points[1:])])


def loop_word(pres: GroupPresentation, loop) -> Tuple[int, ...]:
    """Word of an E-loop (based anywhere; tree conjugation adds no letters)."""
    points = loop.points if isinstance(loop, Chain) else tuple(loop)
    if points[0] != points[-1]:
        raise NotALoop("loop must start and end at the same vertex")
    return chain_word(pres, points)


def word_vector(word: Sequence[int]) -> Dict[int, int]:
    """Abelianized exponent vector of a word (generator index -> sum)."""
    vec: Dict[int, int] = {}
    for s in word:
        g = abs(s) - 1
        vec[g] = vec.get(g, 0) + (1 if s > 0 else -1)
        if vec[g] == 0:
            del vec[g]
    return vec


@dataclass(frozen=True)
class H1Invariants:
    rank: int
    torsion: Tuple[int, ...]


def h1(pres: GroupPresentation) -> H1Invariants:
    """Abelian invariants (free rank, torsion) via Smith normal form of the
    relator abelianization matrix."""
    rank_rel, torsion = smith_invariants(
        (word_vector(w) for w in pres.relators), len(pres.generators))
    return H1Invariants(rank=len(pres.generators) - rank_rel, torsion=tuple(torsion))


@dataclass(frozen=True)
class NullityVerdict:
    """Outcome of a nullity decision.

    status 'null' carries a replay-valid MoveSequence ending at a constant
    chain; 'non_null' carries either a nonzero residue of the loop's
    abelianized word modulo the relator lattice, or (relator-free case) the
    nonempty reduced word itself; 'unknown' reports the exhausted budget.
    """

    status: str  # "null" | "non_null" | "unknown"
    strategy: str  # "free_reduction" | "abelianization" | "bounded_search"
    moves: Optional[MoveSequence] = None
    h1_image: Optional[Tuple[Tuple[int, int], ...]] = None
    word: Optional[Tuple[int, ...]] = None
    states: int = 0
    budget: int = 0

    def is_null(self) -> bool:
        return self.status == "null"

    def is_non_null(self) -> bool:
        return self.status == "non_null"


def _greedy_contract(loop: Chain) -> Tuple[Chain, List[Move]]:
    """Apply legal removals left to right until none applies."""
    rel = loop.entourage.relation
    cur = loop
    moves: List[Move] = []
    progress = True
    while progress:
        progress = False
        pts = cur.points
        for pos in range(1, len(pts) - 1):
            if rel[pts[pos - 1], pts[pos + 1]]:
                mv = Move("remove", pos)
                cur = apply_move(cur, mv)
                moves.append(mv)
                progress = True
                break
    return cur, moves


def _bounded_search(loop: Chain, budget: int) -> Tuple[Optional[List[Move]], int]:
    """BFS over chains reachable by basic moves, looking for a constant chain.

    Chains are memoized by their point tuple; insertions are capped at the
    start length + 2 so the state space stays finite. Returns (moves, states)
    or (None, states) when the budget or the cap exhausts the frontier.
    """
    E = loop.entourage
    rel = E.relation
    n = E.space.n
    start = loop.points
    cap = len(start) + 2
    seen = {start}
    parent: Dict[Tuple[int, ...], Tuple[Tuple[int, ...], Move]] = {}
    queue = deque([start])
    states = 1
    goal = None
    while queue and states < budget:
        pts = queue.popleft()
        if is_constant(pts):
            goal = pts
            break
        children: List[Tuple[Tuple[int, ...], Move]] = []
        for pos in range(1, len(pts) - 1):
            if rel[pts[pos - 1], pts[pos + 1]]:
                children.append((pts[:pos] + pts[pos + 1:], Move("remove", pos)))
        if len(pts) < cap:
            for pos in range(1, len(pts)):
                a, b = pts[pos - 1], pts[pos]
                row = rel[a] & rel[b]
                for v in np.flatnonzero(row):
                    children.append((pts[:pos] + (int(v),) + pts[pos:],
                                     Move("insert", pos, int(v))))
        for child, mv in children:
            if child not in seen:
                seen.add(child)
                states += 1
                parent[child] = (pts, mv)
                if is_constant(child):
                    goal = child
                    queue.clear()
                    queue.append(child)
                    break
                queue.append(child)
        if goal is not None and is_constant(goal):
            break
    if goal is None:
        return None, states
    path: List[Move] = []
    cur = goal
    while cur != start:
        prev, mv = parent[cur]
        path.append(mv)
        cur = prev
    path.reverse()
    return path, states


def decide_null(pres: GroupPresentation, loop, budget: int = DEFAULT_SEARCH_BUDGET) -> NullityVerdict:
    """Layered nullity decision with certificates.

    1. no relators: the reduced word decides exactly;
    2. nonzero abelianized residue: certified non-null;
    3. bounded search for an explicit contraction; otherwise Unknown.
    """
    if not isinstance(loop, Chain):
        loop = validate_chain(pres.entourage, loop)
    if loop.points[0] != loop.points[-1]:
        raise NotALoop("decide_null needs a loop")
    if is_constant(loop.points):
        return NullityVerdict("null", "free_reduction",
                              moves=MoveSequence(loop, (), loop))
    word = loop_word(pres, loop)
    if not pres.relators:
        if word:
            vec = word_vector(word)
            image = tuple(sorted(vec.items())) if vec else None
            return NullityVerdict("non_null", "free_reduction",
                                  h1_image=image, word=word)
        reduced, moves = _greedy_contract(loop)
        if not is_constant(reduced.points):
            extra, states = _bounded_search(reduced, budget)
            if extra is None:
                return NullityVerdict("unknown", "bounded_search",
                                      states=states, budget=budget)
            cur = reduced
            for mv in extra:
                cur = apply_move(cur, mv)
            return NullityVerdict("null", "bounded_search",
                                  moves=MoveSequence(loop, tuple(moves) + tuple(extra), cur),
                                  states=states, budget=budget)
        return NullityVerdict("null", "free_reduction",
                              moves=MoveSequence(loop, tuple(moves), reduced))
    residue = pres.relator_reducer().residue_key(word_vector(word))
    if residue:
        return NullityVerdict("non_null", "abelianization",
                              h1_image=residue, word=word)
    reduced, moves = _greedy_contract(loop)
    if is_constant(reduced.points):
        return NullityVerdict("null", "bounded_search",
                              moves=MoveSequence(loop, tuple(moves), reduced))
    extra, states = _bounded_search(reduced, budget)
    if extra is None:
        return NullityVerdict("unknown", "bounded_search", states=states, budget=budget)
    cur = reduced
    for mv in extra:
        cur = apply_move(cur, mv)
    return NullityVerdict("null", "bounded_search",
                          moves=MoveSequence(loop, tuple(moves) + tuple(extra), cur),
                          states=states, budget=budget)


def kernel_generators(pres: GroupPresentation, D: Entourage) -> List[Chain]:
    """One E-refinement of each D-triad, conjugated to the basepoint by tree
    paths; their normal closure in the deck group is the kernel of the
    coarsening homomorphism. Deduplicates by abelianized image.
    """
    E = pres.entourage
    if not is_subset(E, D):
        raise NotChained(message="kernel_generators needs E contained in D")
    check = is_chained(D)
    if not check.ok:
        raise NotChained(witness=check.witness)
    rel = D.relation
    n = pres.space.n
    reducer = pres.relator_reducer() if pres.relators else None
    out: List[Chain] = []
    seen_images = set()
    for a in range(n):
        row_a = rel[a]
        nbrs = [b for b in np.flatnonzero(row_a) if b > a]
        for bi, b in enumerate(nbrs):
            row_b = rel[b]
            for c in nbrs[bi + 1:]:
                if not row_b[c]:
                    continue
                triad_loop = validate_chain(D, (a, int(b), int(c), a))
                refined, _ = refine(triad_loop, E, _check_chained=False)
                mu = pres.tree_path(a)
                points = mu + refined.points[1:] + tuple(reversed(mu))[1:]
                loop = validate_chain(E, points)
                vec = word_vector(loop_word(pres, loop))
                key = reducer.residue_key(vec) if reducer else tuple(sorted(vec.items()))
                if key in seen_images:
                    continue
                seen_images.add(key)
                out.append(loop)
    return out
