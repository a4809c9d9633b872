"""TSP solvers and tour-cost machinery over :class:`WeightMatrix` instances.

Exact search is plain enumeration of canonical tours and doubles as the
oracle for everything else in the package: the nearest-neighbour and
MST-doubling heuristics, the decision variant and domination counting.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .graph import AsymmetricGraphError, GraphError, WeightMatrix, mst_edges, triangle_inequality_holds

__all__ = [
    "BRUTE_FORCE_CAP",
    "TourError",
    "CapExceededError",
    "DegenerateInstanceError",
    "NonMetricError",
    "Tour",
    "TspDecision",
    "canonical_tour_count",
    "iter_canonical_tours",
    "tour_cost",
    "exact_tour_bruteforce",
    "nn_tour",
    "mst_double_tour",
    "decide_tsp",
    "domination_count",
    "eval_worst_tour_exception",
    "eval_nn_visit_indicator",
    "eval_nn_cost_formula",
]

BRUTE_FORCE_CAP = 11
_CHUNK = 65536


class TourError(ValueError):
    """A tour is not a permutation of the graph's vertices."""


class CapExceededError(RuntimeError):
    """Instance is too large for exhaustive enumeration."""


class DegenerateInstanceError(ValueError):
    pass


class NonMetricError(GraphError):
    pass


@dataclass(frozen=True)
class Tour:
    """Hamiltonian cycle; the closing edge back to ``order[0]`` is implicit."""

    order: tuple[int, ...]
    canonical: bool = False

    def __post_init__(self) -> None:
        order = tuple(int(v) for v in self.order)
        if sorted(order) != list(range(len(order))):
            raise TourError(f"tour {order} is not a permutation of 0..{len(order) - 1}")
        object.__setattr__(self, "order", order)

    def __len__(self) -> int:
        return len(self.order)

    def __iter__(self):
        return iter(self.order)

    def canonicalize(self, symmetric: bool = True) -> "Tour":
        """Rotate to start at 0; on symmetric graphs also fix the direction."""
        n = len(self.order)
        k = self.order.index(0)
        order = self.order[k:] + self.order[:k]
        if symmetric and n >= 3 and order[1] > order[-1]:
            order = (0,) + tuple(reversed(order[1:]))
        return Tour(order, canonical=True)


@dataclass(frozen=True)
class TspDecision:
    """Decision instance: is there a tour of cost at most ``threshold``?"""

    graph: WeightMatrix
    threshold: float

    def __post_init__(self) -> None:
        if not self.threshold >= 0:
            raise ValueError(f"threshold must be >= 0, got {self.threshold}")


def _as_order(g: WeightMatrix, tour: Tour | Sequence[int]) -> tuple[int, ...]:
    order = tour.order if isinstance(tour, Tour) else tuple(int(v) for v in tour)
    if len(order) != g.n:
        raise TourError(f"tour visits {len(order)} vertices, graph has {g.n}")
    if len(set(order)) != len(order):
        raise TourError(f"tour {order} repeats a vertex")
    if any(v < 0 or v >= g.n for v in order):
        raise TourError(f"tour {order} has a vertex outside 0..{g.n - 1}")
    return order


def tour_cost(g: WeightMatrix, tour: Tour | Sequence[int]) -> float:
    """Cost of the closed cycle, summed edge by edge from ``order[0]``."""
    order = _as_order(g, tour)
    w = g.weights
    total = 0.0
    for a, b in zip(order, order[1:] + order[:1]):
        total += float(w[a, b])
    return total


def canonical_tour_count(n: int, symmetric: bool = True) -> int:
    if n < 2:
        return 1
    if symmetric and n >= 3:
        return math.factorial(n - 1) // 2
    return math.factorial(n - 1)


def _check_cap(g: WeightMatrix, cap: int) -> None:
    if g.n < 2:
        raise DegenerateInstanceError(f"need at least 2 vertices, got {g.n}")
    if g.n > cap:
        raise CapExceededError(f"n={g.n} exceeds the brute-force cap of {cap}")


def iter_canonical_tours(g: WeightMatrix, cap: int = BRUTE_FORCE_CAP) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(tails, costs)`` chunks over all canonical tours.

    ``tails`` holds ``order[1:]`` of each tour (vertex 0 is always first), in
    lexicographic order. Costs are accumulated in the same edge order as
    :func:`tour_cost`, so both agree bit for bit.
    """
    _check_cap(g, cap)
    n = g.n
    w = g.weights
    perms = itertools.permutations(range(1, n))
    if g.symmetric and n >= 3:
        perms = (p for p in perms if p[0] < p[-1])
    while True:
        block = list(itertools.islice(perms, _CHUNK))
        if not block:
            return
        tails = np.array(block, dtype=np.intp).reshape(len(block), n - 1)
        costs = w[0, tails[:, 0]].copy()
        for k in range(n - 2):
            costs += w[tails[:, k], tails[:, k + 1]]
        costs += w[tails[:, -1], 0]
        yield tails, costs


def exact_tour_bruteforce(g: WeightMatrix, cap: int = BRUTE_FORCE_CAP) -> tuple[Tour, float]:
    """Optimal tour by exhaustive enumeration.

    Ties resolve to the lexicographically smallest canonical order.
    """
    best_cost = math.inf
    best_tail = None
    for tails, costs in iter_canonical_tours(g, cap):
        i = int(np.argmin(costs))
        if costs[i] < best_cost:
            best_cost = float(costs[i])
            best_tail = tails[i]
    tour = Tour((0, *map(int, best_tail)), canonical=True)
    return tour, best_cost


def nn_tour(g: WeightMatrix, start: int = 0) -> Tour:
    """Nearest-neighbour tour from ``start``; ties go to the smallest vertex id."""
    n = g.n
    if not 0 <= start < n:
        raise ValueError(f"start vertex {start} outside 0..{n - 1}")
    w = g.weights
    visited = np.zeros(n, dtype=bool)
    visited[start] = True
    order = [start]
    cur = start
    for _ in range(n - 1):
        cur = int(np.argmin(np.where(visited, np.inf, w[cur])))
        visited[cur] = True
        order.append(cur)
    return Tour(tuple(order))


def mst_double_tour(g: WeightMatrix) -> Tour:
    """Preorder walk of the MST from vertex 0, children in ascending id.

    Short-cutting the doubled tree walk leaves exactly the preorder, so on
    metric instances the cost is at most twice the MST weight.
    """
    if not g.symmetric:
        raise AsymmetricGraphError("MST doubling needs a symmetric graph")
    if g.n < 2:
        raise DegenerateInstanceError(f"need at least 2 vertices, got {g.n}")
    if not triangle_inequality_holds(g):
        raise NonMetricError("MST doubling bound only holds under the triangle inequality")
    children: dict[int, list[int]] = {v: [] for v in range(g.n)}
    for parent, child in mst_edges(g):
        children[parent].append(child)
    order: list[int] = []
    stack = [0]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(sorted(children[v], reverse=True))
    return Tour(tuple(order))


def decide_tsp(inst: TspDecision, cap: int = BRUTE_FORCE_CAP) -> bool:
    """True iff some tour costs at most ``inst.threshold``."""
    for _, costs in iter_canonical_tours(inst.graph, cap):
        if np.any(costs <= inst.threshold):
            return True
    return False


def domination_count(g: WeightMatrix, tour: Tour | Sequence[int], cap: int = BRUTE_FORCE_CAP) -> int:
    """Number of canonical tours (``tour`` included) costing at least as much."""
    order = _as_order(g, tour)
    _check_cap(g, cap)
    # canonical form so the cost is summed in the same order as the enumeration
    ref = tour_cost(g, Tour(order).canonicalize(g.symmetric))
    return int(sum(int(np.count_nonzero(costs >= ref)) for _, costs in iter_canonical_tours(g, cap)))


# -- closed-form traversal expressions ----------------------------------------


def _series(n: int, N):
    # sum_{k=1}^{n-1} k*N, n(n-1) is always even
    return N * (n * (n - 1) // 2)


def _check_formula_args(n: int, N) -> None:
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N}")


def eval_worst_tour_exception(n: int, N):
    """``sum_{k=1}^{n-1} kN - N + 1``."""
    _check_formula_args(n, N)
    return _series(n, N) - N + 1


def eval_nn_visit_indicator(n: int, N) -> bool:
    """``sum_{k=1}^{n-1} kN > 1``."""
    _check_formula_args(n, N)
    return _series(n, N) > 1


def eval_nn_cost_formula(n: int, N):
    """``C_NN = sum_{i=1}^{n-1} iN + N + 2``."""
    _check_formula_args(n, N)
    return _series(n, N) + N + 2
