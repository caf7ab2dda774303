"""Finite metric spaces with exact rational distances.

All distances are `fractions.Fraction`; nothing in the core pipeline ever
touches floating point, so identities between spectral values (for example
CS = 3/2 * HCS) hold as exact equalities.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    AsymmetricMatrix,
    BadParams,
    DisconnectedGraph,
    NonpositiveEps,
    NonpositiveWeight,
    NonzeroDiagonal,
    TriangleViolation,
    ZeroDistance,
)

__all__ = [
    "FiniteMetricSpace",
    "from_distance_matrix",
    "from_weighted_graph",
    "generate",
    "covering_number",
    "CoveringNumber",
]


@dataclass(frozen=True)
class FiniteMetricSpace:
    """A finite metric space given by its exact pairwise distance table.

    Instances are immutable and safe to share between threads. `dist` is a
    tuple-of-tuples of Fractions; `base_scale` is the smallest positive
    distance and serves as the discrete stand-in for "arbitrarily fine".
    """

    n: int
    dist: Tuple[Tuple[Fraction, ...], ...]
    labels: Optional[Tuple[str, ...]] = None
    description: str = "custom"
    base_scale: Fraction = field(init=False)
    diameter: Fraction = field(init=False)

    def __post_init__(self):
        if self.n >= 2:
            base = min(self.dist[i][j] for i in range(self.n) for j in range(i + 1, self.n))
            diam = max(self.dist[i][j] for i in range(self.n) for j in range(i + 1, self.n))
        else:
            base = Fraction(0)
            diam = Fraction(0)
        object.__setattr__(self, "base_scale", base)
        object.__setattr__(self, "diameter", diam)

    def d(self, i: int, j: int) -> Fraction:
        return self.dist[i][j]

    def distance_values(self) -> Tuple[Fraction, ...]:
        """Sorted distinct positive distances realized by some pair."""
        vals = {self.dist[i][j] for i in range(self.n) for j in range(i + 1, self.n)}
        return tuple(sorted(vals))

    def rank_matrix(self) -> Tuple[np.ndarray, Tuple[Fraction, ...]]:
        """Integer matrix of distance ranks (0 on the diagonal, k for the
        k-th smallest positive realized value) plus the value list.

        Useful for vectorized scale scans; ranks compare exactly like the
        underlying rationals.
        """
        values = self.distance_values()
        index = {v: r + 1 for r, v in enumerate(values)}
        ranks = np.zeros((self.n, self.n), dtype=np.int32)
        for i in range(self.n):
            for j in range(i + 1, self.n):
                r = index[self.dist[i][j]]
                ranks[i, j] = r
                ranks[j, i] = r
        return ranks, values

    def __repr__(self):
        return f"FiniteMetricSpace(n={self.n}, {self.description})"


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise BadParams(f"cannot interpret {x!r} as an exact rational")


def from_distance_matrix(matrix: Sequence[Sequence], labels=None,
                         description: str = "matrix") -> FiniteMetricSpace:
    """Validate a square table of rationals and wrap it as a space.

    Raises NonzeroDiagonal, AsymmetricMatrix, ZeroDistance, or
    TriangleViolation (naming the violating triple) on bad input.
    """
    n = len(matrix)
    rows = []
    for i, row in enumerate(matrix):
        if len(row) != n:
            raise BadParams(f"row {i} has length {len(row)}, expected {n}")
        rows.append(tuple(_as_fraction(x) for x in row))
    for i in range(n):
        if rows[i][i] != 0:
            raise NonzeroDiagonal(i, rows[i][i])
    for i in range(n):
        for j in range(i + 1, n):
            if rows[i][j] != rows[j][i]:
                raise AsymmetricMatrix(i, j)
            if rows[i][j] < 0:
                raise BadParams(f"dist[{i}][{j}] is negative")
            if rows[i][j] == 0:
                raise ZeroDistance(i, j)
    for j in range(n):
        for i in range(n):
            dij = rows[i][j]
            row_i = rows[i]
            row_j = rows[j]
            for k in range(n):
                if row_i[k] > dij + row_j[k]:
                    raise TriangleViolation(i, j, k)
    return FiniteMetricSpace(n=n, dist=tuple(rows),
                             labels=tuple(labels) if labels else None,
                             description=description)


def _dijkstra(n: int, adj: Dict[int, List[Tuple[int, Fraction]]], source: int) -> List[Optional[Fraction]]:
    dist: List[Optional[Fraction]] = [None] * n
    heap: List[Tuple[Fraction, int]] = [(Fraction(0), source)]
    while heap:
        d, u = heapq.heappop(heap)
        if dist[u] is not None:
            continue
        dist[u] = d
        for v, w in adj.get(u, ()):
            if dist[v] is None:
                heapq.heappush(heap, (d + w, v))
    return dist


def from_weighted_graph(n: int, edges: Iterable[Tuple[int, int, object]],
                        labels=None, description: str = "graph") -> FiniteMetricSpace:
    """Shortest-path metric of a connected, positively weighted graph."""
    if n < 1:
        raise BadParams("graph needs at least one vertex")
    adj: Dict[int, List[Tuple[int, Fraction]]] = {i: [] for i in range(n)}
    for (i, j, w) in edges:
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise BadParams(f"bad edge ({i}, {j})")
        wf = _as_fraction(w)
        if wf <= 0:
            raise NonpositiveWeight((i, j), wf)
        adj[i].append((j, wf))
        adj[j].append((i, wf))
    rows = []
    for s in range(n):
        dist = _dijkstra(n, adj, s)
        if any(d is None for d in dist):
            raise DisconnectedGraph(f"vertex {dist.index(None)} unreachable from {s}")
        rows.append(tuple(dist))
    if n == 1:
        return FiniteMetricSpace(n=1, dist=((Fraction(0),),), labels=None,
                                 description=description)
    return from_distance_matrix(rows, labels=labels, description=description)


def _circle(n: int, L: Fraction) -> FiniteMetricSpace:
    if n < 3 or L <= 0:
        raise BadParams("circle needs n >= 3 and L > 0")
    step = L / n
    rows = tuple(
        tuple(step * min((i - j) % n, (j - i) % n) for j in range(n))
        for i in range(n)
    )
    return FiniteMetricSpace(n=n, dist=rows, description=f"circle(n={n}, L={L})")


def _torus_grid(p: int, q: int, Lx: Fraction, Ly: Fraction) -> FiniteMetricSpace:
    """p x q grid on the flat torus, king-move graph metric.

    Adjacency is 8-neighbor: orthogonal steps weigh Lx/p and Ly/q, diagonal
    steps weigh max(Lx/p, Ly/q). With the diagonal edges present the unit
    cells carry triads already at the base scale, so the fine-scale homotopy
    type is that of the torus rather than of the square grid graph.
    """
    if p < 3 or q < 3 or Lx <= 0 or Ly <= 0:
        raise BadParams("torus_grid needs p, q >= 3 and positive side lengths")
    sx = Lx / p
    sy = Ly / q
    sd = max(sx, sy)

    def wrap_steps(a: int, m: int) -> int:
        a %= m
        return min(a, m - a)

    # Single-source distances via Dijkstra on king moves would also work, but
    # the metric has a closed form: a king path spends max(ax, ay) moves of
    # which min(ax, ay) are diagonal.
    def d(i: int, j: int) -> Fraction:
        xi, yi = divmod(i, q)
        xj, yj = divmod(j, q)
        ax = wrap_steps(xi - xj, p)
        ay = wrap_steps(yi - yj, q)
        diag = min(ax, ay)
        return diag * sd + (ax - diag) * sx + (ay - diag) * sy

    n = p * q
    rows = tuple(tuple(d(i, j) for j in range(n)) for i in range(n))
    return FiniteMetricSpace(n=n, dist=rows,
                             description=f"torus_grid({p}x{q}, Lx={Lx}, Ly={Ly})")


def _wedge_of_circles(lengths: Sequence, nodes: Sequence[int]) -> FiniteMetricSpace:
    if len(lengths) != len(nodes) or not lengths:
        raise BadParams("wedge needs matching nonempty length and node-count lists")
    lengths = [_as_fraction(L) for L in lengths]
    if any(L <= 0 for L in lengths) or any(m < 3 for m in nodes):
        raise BadParams("wedge cycles need positive length and >= 3 nodes")
    n = 1 + sum(m - 1 for m in nodes)
    edges = []
    next_vertex = 1
    for L, m in zip(lengths, nodes):
        w = L / m
        cycle = [0] + list(range(next_vertex, next_vertex + m - 1))
        next_vertex += m - 1
        for a, b in zip(cycle, cycle[1:] + [0]):
            edges.append((a, b, w))
    lens = ",".join(str(L) for L in lengths)
    return from_weighted_graph(n, edges, description=f"wedge(L=({lens}), nodes={tuple(nodes)})")


def generate(kind: str, **params) -> FiniteMetricSpace:
    """Build one of the stock test geometries.

    kind = "circle":           params n, L
    kind = "torus_grid":       params p, q, Lx, Ly
    kind = "wedge_of_circles": params lengths, nodes
    """
    if kind == "circle":
        return _circle(int(params["n"]), _as_fraction(params["L"]))
    if kind == "torus_grid":
        return _torus_grid(int(params["p"]), int(params["q"]),
                           _as_fraction(params["Lx"]), _as_fraction(params["Ly"]))
    if kind == "wedge_of_circles":
        return _wedge_of_circles(params["lengths"], [int(m) for m in params["nodes"]])
    raise BadParams(f"unknown generator kind {kind!r}")


@dataclass(frozen=True)
class CoveringNumber:
    count: int
    exact: bool


def covering_number(space: FiniteMetricSpace, eps, exact_threshold: int = 64) -> CoveringNumber:
    """Minimum number of open eps-balls (centers at vertices) covering the space.

    Exact branch-and-bound up to `exact_threshold` vertices; beyond that the
    greedy upper bound is returned with exact=False, which keeps any bound
    built on top of it valid.
    """
    eps = _as_fraction(eps)
    if eps <= 0:
        raise NonpositiveEps(eps)
    n = space.n
    balls = [frozenset(j for j in range(n) if space.dist[i][j] < eps) for i in range(n)]

    def greedy() -> int:
        uncovered = set(range(n))
        used = 0
        while uncovered:
            best = max(range(n), key=lambda i: (len(balls[i] & uncovered), -i))
            gain = balls[best] & uncovered
            uncovered -= gain
            used += 1
        return used

    upper = greedy()
    if n > exact_threshold:
        return CoveringNumber(count=upper, exact=False)

    covers_of = [tuple(i for i in range(n) if v in balls[i]) for v in range(n)]
    best = upper

    def search(uncovered: frozenset, used: int):
        nonlocal best
        if not uncovered:
            best = min(best, used)
            return
        if used + 1 >= best:
            return
        # branch on the hardest-to-cover vertex
        v = min(uncovered, key=lambda u: (len(covers_of[u]), u))
        for i in covers_of[v]:
            search(uncovered - balls[i], used + 1)

    search(frozenset(range(n)), 0)
    return CoveringNumber(count=best, exact=True)
