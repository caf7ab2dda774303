"""Radius-bounded balls of entourage covers, chain lifting, lifted metric.

A cover ball materializes the part of the E-cover within a lifted-metric
radius of the basepoint lift. Lifted points are (base vertex, class key)
pairs: the key is the reduced generator word of a chain from the basepoint
when the presentation is relator-free (exact), otherwise the canonical
residue of its abelianized word, with every coincidence confirmed by an
explicit nullity decision. An Unknown confirmation aborts the build rather
than guessing.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .chains import Chain, validate_chain
from .entourage import (
    Entourage,
    base_entourage,
    connected_under,
    intersection,
    is_chained,
    is_subset,
)
from .errors import (
    BasepointMismatch,
    BadVertex,
    NotChained,
    NotConnected,
    RadiusExceeded,
    UndecidedMerge,
)
from .presentation import (
    DEFAULT_SEARCH_BUDGET,
    GroupPresentation,
    build_presentation,
    chain_word,
    decide_null,
    loop_word,
    word_vector,
)
from .space import FiniteMetricSpace, _as_fraction

__all__ = [
    "CoverBall",
    "LiftedVertex",
    "LiftedDistance",
    "build_cover_ball",
    "lift_chain",
    "lifted_distance",
    "lifted_shortest_path",
    "CoverEquivalence",
    "covers_equivalent",
    "cover_ball_to_json",
]


@dataclass(frozen=True)
class LiftedVertex:
    index: int
    base: int
    key: Tuple
    dist: Fraction
    layer: int


@dataclass(frozen=True)
class LiftedDistance:
    value: Fraction
    exact: bool


class _WordEngine:
    """Exact class keys for relator-free presentations: reduced words."""

    exact = True

    def __init__(self, pres: GroupPresentation):
        self.pres = pres

    def start(self) -> Tuple:
        return ()

    def extend(self, key: Tuple, u: int, v: int) -> Tuple:
        s = self.pres.symbol(u, v)
        if s == 0:
            return key
        if key and key[-1] == -s:
            return key[:-1]
        return key + (s,)


class _ResidueEngine:
    """Abelianized class keys: canonical residues modulo the relator lattice.

    Equal keys must be confirmed by a nullity decision before merging; unequal
    keys are already a sound separation.
    """

    exact = False

    def __init__(self, pres: GroupPresentation):
        self.pres = pres
        self.reducer = pres.relator_reducer()

    def start(self) -> Tuple:
        return ()

    def extend(self, key: Tuple, u: int, v: int) -> Tuple:
        s = self.pres.symbol(u, v)
        if s == 0:
            return key
        vec = dict(key)
        g = abs(s) - 1
        vec[g] = vec.get(g, 0) + (1 if s > 0 else -1)
        if vec[g] == 0:
            del vec[g]
        return self.reducer.residue_key(vec)


class CoverBall:
    """Immutable ball of the E-cover around the basepoint lift."""

    def __init__(self, space: FiniteMetricSpace, entourage: Entourage,
                 radius: Fraction, verts: List[LiftedVertex],
                 edges: List[Tuple[int, int, Fraction]],
                 reps: List[Tuple[int, ...]], pres: GroupPresentation,
                 engine, exact_classes: bool):
        self.space = space
        self.entourage = entourage
        self.radius = radius
        self.verts = verts
        self.edges = edges
        self.reps = reps  # one representative chain (point tuple) per lift
        self.pres = pres
        self._engine = engine
        self.exact_classes = exact_classes
        self.basepoint_lift = 0
        self._index: Dict[Tuple[int, Tuple], int] = {
            (v.base, v.key): v.index for v in verts}
        self._adj: Dict[int, List[Tuple[int, Fraction]]] = {v.index: [] for v in verts}
        for (u, v, w) in edges:
            self._adj[u].append((v, w))
            self._adj[v].append((u, w))
        self._fibers: Dict[int, List[int]] = {}
        for v in verts:
            self._fibers.setdefault(v.base, []).append(v.index)

    def project(self, idx: int) -> int:
        return self.verts[idx].base

    def fiber(self, base_vertex: int) -> List[int]:
        return list(self._fibers.get(base_vertex, []))

    def neighbors(self, idx: int) -> List[Tuple[int, Fraction]]:
        return list(self._adj[idx])

    def find(self, base: int, key: Tuple) -> Optional[int]:
        return self._index.get((base, key))

    def __repr__(self):
        return (f"CoverBall({len(self.verts)} lifts, {len(self.edges)} edges, "
                f"radius {self.radius} over {self.space.description})")


def build_cover_ball(space: FiniteMetricSpace, E: Entourage, radius,
                     budget: int = DEFAULT_SEARCH_BUDGET) -> CoverBall:
    """Dijkstra exploration of (vertex, class) states out to the given
    lifted-metric radius. Raises UndecidedMerge when a class coincidence
    cannot be certified within budget."""
    radius = _as_fraction(radius)
    check = is_chained(E)
    if not check.ok:
        raise NotChained(witness=check.witness)
    if not connected_under(E):
        raise NotConnected("space is not connected under the entourage")
    pres = build_presentation(space, E, _check_chained=False)
    engine = _WordEngine(pres) if not pres.relators else _ResidueEngine(pres)

    State = Tuple[int, Tuple]
    start_state: State = (0, engine.start())
    dist: Dict[State, Fraction] = {start_state: Fraction(0)}
    reps: Dict[State, Tuple[int, ...]] = {start_state: (0,)}
    layer: Dict[State, int] = {start_state: 0}
    final: Dict[State, Fraction] = {}
    edge_set = set()
    edges: List[Tuple[State, State, Fraction]] = []
    heap: List[Tuple[Fraction, int, Tuple]] = [(Fraction(0), 0, engine.start())]
    d = space.dist
    while heap:
        du, u_base, u_key = heapq.heappop(heap)
        u_state = (u_base, u_key)
        if u_state in final:
            continue
        final[u_state] = du
        for v_base in E.neighbors(u_base):
            if v_base == u_base:
                continue
            step = d[u_base][v_base]
            nd = du + step
            v_key = engine.extend(u_key, u_base, v_base)
            v_state = (v_base, v_key)
            if v_state in dist:
                pair = (u_state, v_state) if u_state <= v_state else (v_state, u_state)
                if pair not in edge_set:
                    edge_set.add(pair)
                    if not engine.exact:
                        _confirm_merge(pres, reps[u_state] + (v_base,),
                                       reps[v_state], budget)
                    edges.append((u_state, v_state, step))
                if v_state not in final and nd < dist[v_state]:
                    dist[v_state] = nd
                    reps[v_state] = reps[u_state] + (v_base,)
                    layer[v_state] = layer[u_state] + 1
                    heapq.heappush(heap, (nd, v_base, v_key))
                continue
            if nd > radius:
                continue
            dist[v_state] = nd
            reps[v_state] = reps[u_state] + (v_base,)
            layer[v_state] = layer[u_state] + 1
            pair = (u_state, v_state) if u_state <= v_state else (v_state, u_state)
            edge_set.add(pair)
            edges.append((u_state, v_state, step))
            heapq.heappush(heap, (nd, v_base, v_key))

    states = sorted(final, key=lambda s: (final[s], s))
    index = {s: i for i, s in enumerate(states)}
    verts = [LiftedVertex(index=i, base=s[0], key=s[1], dist=final[s], layer=layer[s])
             for i, s in enumerate(states)]
    edge_list = sorted(
        {(min(index[a], index[b]), max(index[a], index[b]), w)
         for (a, b, w) in edges if a in index and b in index})
    rep_list = [reps[s] for s in states]
    return CoverBall(space, E, radius, verts, edge_list, rep_list, pres, engine,
                     exact_classes=engine.exact)


def _confirm_merge(pres: GroupPresentation, chain_u: Tuple[int, ...],
                   chain_v: Tuple[int, ...], budget: int):
    """Certify that two routes into one (vertex, residue) state are homotopic.

    The abelianized residues already agree, so the only verdicts the cascade
    can reach are Null (fine) or Unknown (abort the build honestly).
    """
    loop_pts = chain_u + tuple(reversed(chain_v))[1:]
    loop = validate_chain(pres.entourage, loop_pts)
    verdict = decide_null(pres, loop, budget=budget)
    if verdict.status != "null":
        raise UndecidedMerge(loop_pts)


def lift_chain(cb: CoverBall, chain: Chain, start: int) -> Tuple[int, ...]:
    """The unique lift of a chain starting at the given lifted point.

    Each step has exactly one lifted neighbor over its target vertex, so the
    lift is determined; leaving the built ball raises RadiusExceeded.
    """
    if not (0 <= start < len(cb.verts)):
        raise BadVertex(start, len(cb.verts))
    if cb.project(start) != chain.points[0]:
        raise BasepointMismatch(
            f"lift start projects to {cb.project(start)}, chain starts at {chain.points[0]}")
    if not is_subset(chain.entourage, cb.entourage):
        raise RadiusExceeded("chain entourage exceeds the cover's entourage")
    out = [start]
    cur = cb.verts[start]
    for u, v in zip(chain.points, chain.points[1:]):
        if u == v:
            out.append(cur.index)
            continue
        nkey = cb._engine.extend(cur.key, u, v)
        idx = cb.find(v, nkey)
        if idx is None:
            raise RadiusExceeded(f"lift leaves the built radius at base vertex {v}")
        cur = cb.verts[idx]
        out.append(idx)
    return tuple(out)


def lifted_shortest_path(cb: CoverBall, u: int, v: int):
    """Shortest path between two lifts inside the ball: (vertex list, length),
    or (None, None) when no path stays within the ball."""
    dist: Dict[int, Fraction] = {}
    parent: Dict[int, int] = {}
    heap = [(Fraction(0), u, -1)]
    while heap:
        dd, x, par = heapq.heappop(heap)
        if x in dist:
            continue
        dist[x] = dd
        parent[x] = par
        if x == v:
            break
        for (y, w) in cb.neighbors(x):
            if y not in dist:
                heapq.heappush(heap, (dd + w, y, x))
    if v not in dist:
        return None, None
    path = [v]
    while path[-1] != u:
        path.append(parent[path[-1]])
    path.reverse()
    return path, dist[v]


def lifted_distance(cb: CoverBall, u: int, v: int) -> LiftedDistance:
    """Shortest-path distance in the lifted graph.

    exact is True when the whole geodesic provably stays inside the ball
    (min endpoint depth + value <= radius); otherwise the value is only an
    upper-bound witness relative to the built radius.
    """
    path, value = lifted_shortest_path(cb, u, v)
    if path is None:
        return LiftedDistance(value=Fraction(-1), exact=False)
    du = cb.verts[u].dist
    dv = cb.verts[v].dist
    exact = min(du, dv) + value <= cb.radius
    return LiftedDistance(value=value, exact=exact)


class CoverEquivalence(enum.Enum):
    EQUIVALENT = "equivalent"
    INEQUIVALENT = "inequivalent"
    UNKNOWN = "unknown"


def covers_equivalent(space: FiniteMetricSpace, E: Entourage, F: Entourage,
                      budget: int = DEFAULT_SEARCH_BUDGET) -> CoverEquivalence:
    """Test equivalence of the E- and F-covers through the common refinement
    D = E & F: the kernels of the two coarsening maps agree iff every
    D-refined E-triad is F-null and every D-refined F-triad is E-null."""
    for G in (E, F):
        check = is_chained(G)
        if not check.ok:
            raise NotChained(witness=check.witness)
    if E == F:
        return CoverEquivalence.EQUIVALENT
    D = intersection(E, F)
    if not connected_under(D):
        raise NotConnected("common refinement disconnects the space")
    pres_E = build_presentation(space, E, _check_chained=False)
    pres_F = build_presentation(space, F, _check_chained=False)
    forward = _kernel_contained(space, E, F, D, pres_F, budget)
    if forward is False:
        return CoverEquivalence.INEQUIVALENT
    backward = _kernel_contained(space, F, E, D, pres_E, budget)
    if backward is False:
        return CoverEquivalence.INEQUIVALENT
    if forward is True and backward is True:
        return CoverEquivalence.EQUIVALENT
    return CoverEquivalence.UNKNOWN


def _kernel_contained(space: FiniteMetricSpace, upper: Entourage, other: Entourage,
                      D: Entourage, pres_other: GroupPresentation,
                      budget: int) -> Optional[bool]:
    """Is ker(theta_{upper <- D}) inside ker(theta_{other <- D})?

    Equivalent to: every D-refinement of an upper-triad is other-null.
    Loops are deduplicated by their abelianized residue in the other-group;
    a nonzero residue certifies non-containment.
    """
    rel = upper.relation
    n = space.n
    reducer = pres_other.relator_reducer() if pres_other.relators else None
    path_cache: Dict[Tuple[int, int], Optional[List[int]]] = {}
    seen_keys = set()
    unknown = False
    from .chains import _constrained_shortest_path, ball_intersection

    for a in range(n):
        nbrs = [b for b in np.flatnonzero(rel[a]) if b > a]
        for bi, b in enumerate(nbrs):
            row_b = rel[b]
            for c in nbrs[bi + 1:]:
                if not row_b[c]:
                    continue
                pts: List[int] = [a]
                ok = True
                for (x, y) in ((a, int(b)), (int(b), int(c)), (int(c), a)):
                    if (x, y) in path_cache:
                        seg = path_cache[(x, y)]
                    elif (y, x) in path_cache:
                        back = path_cache[(y, x)]
                        seg = None if back is None else list(reversed(back))
                    else:
                        if D.relation[x, y]:
                            seg = [x, y]
                        else:
                            allowed = frozenset(ball_intersection(upper, x, y))
                            seg = _constrained_shortest_path(D, allowed, x, y)
                        path_cache[(x, y)] = seg
                    if seg is None:
                        raise NotChained(witness=(x, y),
                                         message="no refinement path inside the ball intersection")
                    pts.extend(seg[1:])
                loop = validate_chain(other, pts)
                word = loop_word(pres_other, loop)
                vec = word_vector(word)
                key = reducer.residue_key(vec) if reducer else tuple(sorted(vec.items()))
                if key in seen_keys:
                    continue
                seen_keys.add(key)
                verdict = decide_null(pres_other, loop, budget=budget)
                if verdict.is_non_null():
                    return False
                if verdict.status == "unknown":
                    unknown = True
    return None if unknown else True


def cover_ball_to_json(cb: CoverBall) -> dict:
    from .fileio import frac_str
    return {
        "space": cb.space.description,
        "entourage": cb.entourage.describe(),
        "radius": frac_str(cb.radius),
        "exact_classes": cb.exact_classes,
        "nodes": [
            {"id": v.index, "base": v.base, "dist": frac_str(v.dist), "layer": v.layer}
            for v in cb.verts
        ],
        "edges": [
            {"u": u, "v": v, "length": frac_str(w)} for (u, v, w) in cb.edges
        ],
    }
