"""Schrodinger operators H = Delta + Q on rooted graphs.

Two diagonal conventions are supported: COMBINATORIAL uses the graph
Laplacian (Delta psi)(v) = sum_{u~v} (psi(u) - psi(v)); ADJACENCY drops the
degree term so Delta is the plain adjacency operator.  Truncations are plain
restrictions: a ball matrix keeps the full-graph diagonal and drops the
outside rows and columns.

Operators are immutable; apply / ball_matrix / weyl_residual are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import BallView, RootedGraph, ball

COMBINATORIAL = "COMBINATORIAL"
ADJACENCY = "ADJACENCY"


@dataclass(frozen=True)
class StateVector:
    values: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def _as_values(psi):
    if isinstance(psi, StateVector):
        return psi.values
    return np.asarray(psi)


@dataclass(frozen=True)
class SchrodingerOperator:
    graph: RootedGraph
    potential: np.ndarray
    convention: str = ADJACENCY
    _flat: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        q = np.asarray(self.potential, dtype=float)
        if q.shape != (self.graph.vertex_count,):
            raise ValueError("potential length must equal vertex count")
        if self.convention not in (COMBINATORIAL, ADJACENCY):
            raise ValueError(f"unknown convention {self.convention!r}")
        object.__setattr__(self, "potential", q)
        # CSR-style neighbor arrays for matrix-free application
        indptr = np.zeros(self.graph.vertex_count + 1, dtype=np.int64)
        for v, nbrs in enumerate(self.graph.adjacency):
            indptr[v + 1] = indptr[v] + len(nbrs)
        indices = np.fromiter(
            (u for nbrs in self.graph.adjacency for u in nbrs),
            dtype=np.int64, count=indptr[-1])
        rows = np.repeat(np.arange(self.graph.vertex_count), np.diff(indptr))
        degrees = np.diff(indptr).astype(float)
        diag = q - degrees if self.convention == COMBINATORIAL else q.copy()
        object.__setattr__(self, "_flat", (indptr, indices, rows, degrees, diag))

    @property
    def degrees(self) -> np.ndarray:
        return self._flat[3]

    def diagonal(self) -> np.ndarray:
        """Full-graph diagonal of H (potential plus convention term)."""
        return self._flat[4]

    def gershgorin_bound(self) -> float:
        return float(np.max(np.abs(self.diagonal()) + self.degrees))


def potential_from_rule(graph: RootedGraph, rule) -> np.ndarray:
    """Evaluate a potential rule to an explicit per-vertex vector.

    Grammar: {"rule": "constant", "c": x} | {"rule": "explicit",
    "values": [...]} | {"rule": "sparse-squares", "alpha": a}, the last one
    putting ``alpha`` on vertices whose distance from the root is a perfect
    square.
    """
    kind = rule["rule"]
    n = graph.vertex_count
    if kind == "constant":
        return np.full(n, float(rule["c"]))
    if kind == "explicit":
        vals = np.asarray(rule["values"], dtype=float)
        if vals.shape != (n,):
            raise ValueError("explicit potential has wrong length")
        return vals
    if kind == "sparse-squares":
        alpha = float(rule["alpha"])
        dist = graph.distances_from(graph.root)
        q = np.zeros(n)
        for v, dv in dist.items():
            r = int(round(dv ** 0.5))
            if dv >= 1 and r * r == dv:
                q[v] = alpha
        return q
    raise ValueError(f"unknown potential rule {kind!r}")


def apply(h: SchrodingerOperator, psi) -> np.ndarray:
    """Matrix-free H psi, O(edges)."""
    x = _as_values(psi)
    if x.shape != (h.graph.vertex_count,):
        raise ValueError("dimension mismatch")
    _, indices, rows, _, diag = h._flat
    if np.iscomplexobj(x):
        out = np.bincount(rows, weights=x.real[indices], minlength=len(x)) \
            + 1j * np.bincount(rows, weights=x.imag[indices], minlength=len(x))
    else:
        out = np.bincount(rows, weights=x[indices], minlength=len(x))
    return out + diag * x


def ball_matrix(h: SchrodingerOperator, v: int, r: int):
    """Dense symmetric matrix of H restricted to B_r(v), coherently indexed.

    Returns (BallView, matrix).  The upper-left corner at any smaller radius
    equals that radius's ball matrix.
    """
    view = ball(h.graph, v, r)
    return view, matrix_on_view(h, view)


def matrix_on_view(h: SchrodingerOperator, view: BallView) -> np.ndarray:
    n = len(view.members)
    m = np.zeros((n, n))
    diag = h.diagonal()
    for i, u in enumerate(view.members):
        m[i, i] = diag[u]
        for w in h.graph.adjacency[u]:
            j = view.index_of.get(w)
            if j is not None:
                m[i, j] = 1.0
    return m


def weyl_residual(h: SchrodingerOperator, psi, lam: float) -> float:
    """||(H - lambda) psi|| / ||psi||."""
    x = _as_values(psi)
    nrm = np.linalg.norm(x)
    if nrm == 0:
        raise ValueError("zero vector has no Weyl residual")
    return float(np.linalg.norm(apply(h, x) - lam * x) / nrm)
