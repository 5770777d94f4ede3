"""Conditional independence graphs and their two-part description length."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelInvalidError


@dataclass(frozen=True)
class CIGraph:
    """Undirected graph over d vertices encoding a precision sparsity pattern.

    Edges are stored as a frozenset of (i, j) pairs with i < j; self-loops
    are rejected and duplicates collapse.
    """

    vertex_count: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.vertex_count < 1:
            raise ValueError(f"vertex_count must be >= 1, got {self.vertex_count}")
        normalized = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop on vertex {i}")
            if not (0 <= i < self.vertex_count and 0 <= j < self.vertex_count):
                raise ValueError(f"edge ({i},{j}) out of range for d={self.vertex_count}")
            normalized.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(normalized))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def max_edges(self) -> int:
        d = self.vertex_count
        return d * (d - 1) // 2

    @property
    def is_empty(self) -> bool:
        return not self.edges

    @property
    def is_complete(self) -> bool:
        return len(self.edges) == self.max_edges

    def edge_arrays(self):
        """Edges as two int64 arrays in sorted order (deterministic)."""
        pairs = sorted(self.edges)
        ei = np.array([p[0] for p in pairs], dtype=np.int64)
        ej = np.array([p[1] for p in pairs], dtype=np.int64)
        return ei, ej

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.vertex_count, self.vertex_count), dtype=bool)
        for i, j in self.edges:
            a[i, j] = True
            a[j, i] = True
        return a

    @classmethod
    def complete(cls, d: int) -> "CIGraph":
        return cls(d, frozenset((i, j) for i in range(d) for j in range(i + 1, d)))

    @classmethod
    def empty(cls, d: int) -> "CIGraph":
        return cls(d)


def graph_from_precision(omega: np.ndarray, threshold: float = 1e-8) -> CIGraph:
    """Read the edge pattern off a symmetric precision matrix.

    An edge (i, j) is present iff |omega_ij| > threshold, i != j.
    """
    omega = np.asarray(omega, dtype=np.float64)
    if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
        raise ModelInvalidError(f"precision must be square, got {omega.shape}")
    scale = max(1.0, float(np.abs(omega).max()))
    if float(np.abs(omega - omega.T).max()) > 1e-8 * scale:
        raise ModelInvalidError("precision is not symmetric")
    d = omega.shape[0]
    iu, ju = np.triu_indices(d, k=1)
    mask = np.abs(omega[iu, ju]) > threshold
    edges = frozenset(zip(iu[mask].tolist(), ju[mask].tolist()))
    return CIGraph(d, edges)


def _log2_binomial(n: int, k: int) -> float:
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)) / math.log(2)


def graph_codelength(g: CIGraph) -> float:
    """Bits to describe the graph: edge count, then the edge set uniformly.

    L(G) = log2(E_max + 1) + log2 C(E_max, |E|) with E_max = d(d-1)/2.
    Depends only on d and |E|, so it is invariant under vertex relabeling.
    """
    emax = g.max_edges
    return math.log2(emax + 1) + _log2_binomial(emax, g.edge_count)
