"""Weighted complete graphs for the network environment.

A :class:`WeightMatrix` is the full ``n x n`` cost matrix of a complete graph
over hosts ``0 .. n-1``. It is validated on construction and immutable
afterwards, so instances can be shared freely between solvers, the simulator
and the detector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "GraphError",
    "DimensionError",
    "NegativeWeightError",
    "NonZeroDiagonalError",
    "NonFiniteWeightError",
    "AsymmetricGraphError",
    "GraphFormatError",
    "WeightMatrix",
    "build_complete_graph",
    "triangle_inequality_holds",
    "mst_edges",
    "mst_weight",
    "random_metric_instance",
    "parse_graph_text",
    "format_graph_text",
    "read_graph_file",
    "write_graph_file",
]


class GraphError(ValueError):
    """Base class for invalid graph input."""


class DimensionError(GraphError):
    pass


class NegativeWeightError(GraphError):
    pass


class NonZeroDiagonalError(GraphError):
    pass


class NonFiniteWeightError(GraphError):
    pass


class AsymmetricGraphError(GraphError):
    pass


class GraphFormatError(GraphError):
    """Raised when a graph file cannot be parsed."""


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Validated cost matrix of a complete graph.

    ``weights[i, j]`` is the cost of travelling from ``i`` to ``j``. When
    ``symmetric`` is set the matrix is guaranteed to equal its transpose.
    """

    weights: np.ndarray
    symmetric: bool = True

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=np.float64, copy=True)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DimensionError(f"weight matrix must be square, got shape {w.shape}")
        if w.shape[0] < 1:
            raise DimensionError("graph needs at least one vertex")
        if not np.all(np.isfinite(w)):
            raise NonFiniteWeightError("weights must be finite")
        if np.any(w < 0):
            i, j = map(int, np.argwhere(w < 0)[0])
            raise NegativeWeightError(f"negative weight {w[i, j]} on edge ({i}, {j})")
        if np.any(np.diag(w) != 0):
            i = int(np.flatnonzero(np.diag(w))[0])
            raise NonZeroDiagonalError(f"diagonal entry ({i}, {i}) is {w[i, i]}, expected 0")
        if self.symmetric and not np.array_equal(w, w.T):
            raise AsymmetricGraphError("symmetric flag set but weights differ from transpose")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "symmetric", bool(self.symmetric))

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def __getitem__(self, edge: tuple[int, int]) -> float:
        return float(self.weights[edge])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightMatrix):
            return NotImplemented
        return self.symmetric == other.symmetric and np.array_equal(self.weights, other.weights)

    def __hash__(self) -> int:
        return hash((self.symmetric, self.weights.tobytes()))

    def is_integral(self) -> bool:
        return bool(np.all(self.weights == np.round(self.weights)))

    def subgraph(self, vertices: Sequence[int]) -> "WeightMatrix":
        """Complete graph induced by ``vertices`` (re-indexed in the given order)."""
        idx = np.asarray(vertices, dtype=np.intp)
        return WeightMatrix(self.weights[np.ix_(idx, idx)], self.symmetric)


def build_complete_graph(n: int, weights, symmetric: bool = True) -> WeightMatrix:
    """Build a validated :class:`WeightMatrix` from a nested or flat cost list.

    Accepted layouts are a nested ``n x n`` list, a flat list of ``n*n``
    entries in row-major order, or (symmetric graphs only) the ``n(n-1)/2``
    strict upper triangle read row by row, which is mirrored.
    """
    if n < 1:
        raise DimensionError(f"n must be >= 1, got {n}")
    arr = np.asarray(weights, dtype=np.float64)
    if arr.ndim == 2:
        if arr.shape != (n, n):
            raise DimensionError(f"expected {n}x{n} matrix, got {arr.shape}")
        mat = arr
    elif arr.ndim == 1 and arr.size == n * n:
        mat = arr.reshape(n, n)
    elif arr.ndim == 1 and symmetric and arr.size == n * (n - 1) // 2:
        mat = np.zeros((n, n))
        iu = np.triu_indices(n, k=1)
        mat[iu] = arr
        mat = mat + mat.T
        if np.any(arr < 0):
            raise NegativeWeightError("negative weight in upper-triangle input")
    else:
        expected = f"{n * n}" + (f" or {n * (n - 1) // 2}" if symmetric else "")
        raise DimensionError(f"expected {expected} weights for n={n}, got {arr.size}")
    return WeightMatrix(mat, symmetric)


def triangle_inequality_holds(g: WeightMatrix, rtol: float = 1e-12) -> bool:
    """True iff ``w(a, c) <= w(a, b) + w(b, c)`` for every vertex triple.

    ``rtol`` (relative to the largest weight) absorbs last-bit rounding in
    floating Euclidean distances; integer instances are compared exactly as
    long as their weights stay below ``1 / rtol``.
    """
    w = g.weights
    if g.n < 3:
        return True
    slack = rtol * float(w.max())
    for b in range(g.n):
        # via[a, c] = w(a, b) + w(b, c)
        via = w[:, b][:, None] + w[b, :][None, :]
        if np.any(w > via + slack):
            return False
    return True


def mst_edges(g: WeightMatrix) -> list[tuple[int, int]]:
    """Edges ``(parent, child)`` of a minimum spanning tree rooted at vertex 0.

    Dense Prim's algorithm; among equal keys the smallest vertex id is added
    first, and a key is only replaced by a strictly smaller weight, so the
    tree is deterministic.
    """
    if not g.symmetric:
        raise AsymmetricGraphError("minimum spanning tree requires a symmetric graph")
    n = g.n
    w = g.weights
    in_tree = np.zeros(n, dtype=bool)
    key = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.intp)
    key[0] = 0.0
    edges: list[tuple[int, int]] = []
    for _ in range(n):
        u = int(np.argmin(np.where(in_tree, np.inf, key)))
        in_tree[u] = True
        if parent[u] >= 0:
            edges.append((int(parent[u]), u))
        better = ~in_tree & (w[u] < key)
        key[better] = w[u][better]
        parent[better] = u
    return edges


def mst_weight(g: WeightMatrix) -> float:
    """Total weight of a minimum spanning tree (0 for a single vertex)."""
    return float(sum(g.weights[a, b] for a, b in mst_edges(g)))


def random_metric_instance(
    n: int, seed: int, scale: float = 100.0, integer: bool = False
) -> WeightMatrix:
    """Euclidean distances between ``n`` seeded uniform points in a square.

    With ``integer=True`` every distance is rounded up; ceiling preserves the
    triangle inequality, so the result is still metric.
    """
    if n < 1:
        raise DimensionError(f"n must be >= 1, got {n}")
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, scale, size=(n, 2))
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    if integer:
        dist = np.ceil(dist)
    np.fill_diagonal(dist, 0.0)
    return WeightMatrix(dist, symmetric=True)


# -- file format --------------------------------------------------------------
#
#   n=<count> symmetric=<0|1>
#   <n lines of n space-separated decimal weights>


def _format_weight(x: float) -> str:
    if float(x).is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(float(x))


def format_graph_text(g: WeightMatrix) -> str:
    lines = [f"n={g.n} symmetric={int(g.symmetric)}"]
    for row in g.weights:
        lines.append(" ".join(_format_weight(x) for x in row))
    return "\n".join(lines) + "\n"


def parse_graph_text(text: str) -> WeightMatrix:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise GraphFormatError("empty graph file")
    header = dict(tok.split("=", 1) for tok in lines[0].split() if "=" in tok)
    try:
        n = int(header["n"])
        sym_flag = header["symmetric"]
    except (KeyError, ValueError) as exc:
        raise GraphFormatError(f"bad header line {lines[0]!r}") from exc
    if sym_flag not in ("0", "1"):
        raise GraphFormatError(f"symmetric must be 0 or 1, got {sym_flag!r}")
    if n < 1:
        raise GraphFormatError(f"n must be >= 1, got {n}")
    rows = lines[1:]
    if len(rows) != n:
        raise GraphFormatError(f"header says n={n} but found {len(rows)} weight rows")
    matrix = []
    for i, row in enumerate(rows):
        try:
            values = [float(tok) for tok in row.split()]
        except ValueError as exc:
            raise GraphFormatError(f"row {i}: non-numeric weight") from exc
        if len(values) != n:
            raise GraphFormatError(f"row {i} has {len(values)} entries, expected {n}")
        if not all(math.isfinite(v) for v in values):
            raise GraphFormatError(f"row {i}: non-finite weight")
        matrix.append(values)
    return WeightMatrix(np.array(matrix), symmetric=sym_flag == "1")


def read_graph_file(path: str | Path) -> WeightMatrix:
    return parse_graph_text(Path(path).read_text())


def write_graph_file(g: WeightMatrix, path: str | Path) -> None:
    Path(path).write_text(format_graph_text(g))
