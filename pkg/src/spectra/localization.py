"""Partition-of-unity trial functions and the localization-cost operator.

The pyramid partition centers a tent profile at every vertex and carries
two normalizers: a per-center mass c_r^2 and a pointwise sum eta_r^2, so
that sum_u psi_{u,r}^2(v) = 1 exactly.  The annuli partition tents over
distance shells around the root and needs only the pointwise normalizer.
The localization cost of a partition is the positive semidefinite operator
C^(r) = -2 sum [H, psi]^2, whose entries vanish beyond graph distance 2.

Entries computed on the interior mask (vertices at distance >= 2r+2 from
the truncation frontier) agree exactly with their infinite-graph values,
because every sum in the normalizers is then unclipped.  [H, psi] depends
only on the adjacency part of H, so potentials never change C^(r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .eigensolve import eig_sym_dense, spectral_norm
from .graphs import RootedGraph, build_regular_tree
from .operators import SchrodingerOperator

PYRAMID = "PYRAMID"
ANNULI = "ANNULI"


def pyramid_profile(r: int):
    """Tent profile f_r(k) = (r - k)/r on 0..r, zero beyond."""
    def f(k):
        return (r - k) / r if 0 <= k <= r else 0.0
    return f


@dataclass
class PartitionOfUnity:
    """Lazy partition data bound to one graph and radius.

    Normalizers are memoized per center / vertex; only what the commutator
    assembly touches is ever computed, which keeps deep tree truncations
    tractable.
    """

    graph: RootedGraph
    kind: str
    radius: int
    _c2: dict = field(default_factory=dict)
    _eta2: dict = field(default_factory=dict)
    _levels: dict = None
    _ring_norm2: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in (PYRAMID, ANNULI):
            raise ValueError(f"unknown partition kind {self.kind!r}")
        if self.radius < 1:
            raise ValueError("radius must be >= 1")
        if self.kind == ANNULI:
            self._levels = self.graph.distances_from(self.graph.root)

    # -- pyramid -----------------------------------------------------------
    def chi(self, u: int, v_dist: int) -> float:
        r = self.radius
        return (r - v_dist) / r if v_dist <= r else 0.0

    def c2(self, u: int) -> float:
        """Per-center mass sum_v chi_{u,r}(v)^2 (pyramid kind)."""
        if u not in self._c2:
            r = self.radius
            dist = self.graph.distances_from(u, cutoff=r - 1)
            self._c2[u] = sum(((r - dv) / r) ** 2 for dv in dist.values())
        return self._c2[u]

    def eta2(self, v: int) -> float:
        """Pointwise normalizer sum_u chi_{u,r}(v)^2 / c_r^2(u)."""
        if v not in self._eta2:
            r = self.radius
            dist = self.graph.distances_from(v, cutoff=r - 1)
            self._eta2[v] = sum(((r - dv) / r) ** 2 / self.c2(u)
                                for u, dv in dist.items())
        return self._eta2[v]

    # -- annuli ------------------------------------------------------------
    def ring_chi(self, k: int, level: int) -> float:
        r = self.radius
        gap = abs(level - k)
        return (r - gap) / r if gap < r else 0.0

    def ring_norm2(self, level: int) -> float:
        if level not in self._ring_norm2:
            r = self.radius
            self._ring_norm2[level] = sum(
                self.ring_chi(k, level) ** 2
                for k in range(max(0, level - r + 1), level + r))
        return self._ring_norm2[level]

    # -- unified weight ----------------------------------------------------
    def psi_table(self, vertices):
        """dict center -> {vertex: psi value} over the given vertices.

        Centers are vertices (pyramid) or ring indices (annuli); only
        centers whose tent touches ``vertices`` appear.
        """
        r = self.radius
        out = {}
        if self.kind == PYRAMID:
            for v in vertices:
                dist = self.graph.distances_from(v, cutoff=r - 1)
                ev = math.sqrt(self.eta2(v))
                for u, dv in dist.items():
                    w = ((r - dv) / r) / (ev * math.sqrt(self.c2(u)))
                    out.setdefault(u, {})[v] = w
        else:
            for v in vertices:
                lv = self._levels[v]
                nv = math.sqrt(self.ring_norm2(lv))
                for k in range(max(0, lv - r + 1), lv + r):
                    out.setdefault(k, {})[v] = self.ring_chi(k, lv) / nv
        return out

    def partition_sum(self, v: int) -> float:
        """sum over centers of psi^2 at v; equals 1 wherever defined."""
        r = self.radius
        if self.kind == PYRAMID:
            dist = self.graph.distances_from(v, cutoff=r - 1)
            ev2 = self.eta2(v)
            return sum(((r - dv) / r) ** 2 / self.c2(u)
                       for u, dv in dist.items()) / ev2
        lv = self._levels[v]
        return sum(self.ring_chi(k, lv) ** 2
                   for k in range(max(0, lv - r + 1), lv + r)) \
            / self.ring_norm2(lv)

    def interior_mask(self):
        """Vertices whose commutator entries equal infinite-graph values."""
        bd = self.graph.boundary_distances()
        margin = 2 * self.radius + 2
        return sorted(v for v in range(self.graph.vertex_count)
                      if bd.get(v, 0) >= margin)


def build_partition(g: RootedGraph, h: SchrodingerOperator, kind: str,
                    r: int) -> PartitionOfUnity:
    if h.graph is not g:
        raise ValueError("operator and graph disagree")
    p = PartitionOfUnity(graph=g, kind=kind, radius=r)
    if not p.interior_mask():
        raise ValueError(
            f"truncation margin too small for radius {r} (no interior)")
    return p


@dataclass(frozen=True)
class CommutatorOperator:
    """C^(r) restricted to the interior mask (dense symmetric block)."""

    interior: tuple
    matrix: np.ndarray
    radius: int

    @property
    def norm(self) -> float:
        return spectral_norm(self.matrix, iters=30000, tol=1e-8)

    @property
    def diag_min(self) -> float:
        return float(np.min(np.abs(np.diag(self.matrix))))


def assemble_commutator(p: PartitionOfUnity, h: SchrodingerOperator,
                        interior=None) -> CommutatorOperator:
    """Assemble C^(r) = -2 sum_u [H, psi_u]^2 on the interior block.

    [H, psi]_{vx} = psi(x) - psi(v) across each edge, so entries couple
    vertices at distance <= 2 and each entry is a sum over the centers
    whose tents touch the middle vertex.
    """
    g = p.graph
    if interior is None:
        interior = p.interior_mask()
    interior = list(interior)
    if not interior:
        raise ValueError("empty interior")
    pos = {v: i for i, v in enumerate(interior)}

    middles = sorted({x for v in interior for x in g.adjacency[v]})
    relevant = sorted(set(interior) | set(middles)
                      | {w for x in middles for w in g.adjacency[x]})
    table = p.psi_table(relevant)

    diffs = {}   # directed edge (p, q) -> {center: psi(q) - psi(p)}
    def diff(a, b):
        key = (a, b)
        if key not in diffs:
            d = {}
            for u, vals in table.items():
                x = vals.get(b, 0.0) - vals.get(a, 0.0)
                if x != 0.0:
                    d[u] = x
            diffs[key] = d
        return diffs[key]

    n = len(interior)
    C = np.zeros((n, n))
    for v in interior:
        iv = pos[v]
        for x in g.adjacency[v]:
            dvx = diff(v, x)
            for w in g.adjacency[x]:
                iw = pos.get(w)
                if iw is None or iw < iv:
                    continue
                dxw = diff(x, w)
                small, big = (dvx, dxw) if len(dvx) <= len(dxw) else (dxw, dvx)
                acc = 0.0
                for u, val in small.items():
                    other = big.get(u)
                    if other is not None:
                        acc += val * other
                C[iv, iw] -= 2.0 * acc
                if iw != iv:
                    C[iw, iv] = C[iv, iw]
    return CommutatorOperator(interior=tuple(interior), matrix=C,
                              radius=p.radius)


def leindler_check(sphere_sizes, profile, r: int):
    """Evaluate both sides of the weighted discrete Hardy inequality at p=2.

    lambda_n = S(r-n) and a_n = x_r(n), the increments of the reversed
    profile; returns (lhs, rhs) for the assertion lhs <= rhs.
    """
    S = list(sphere_sizes)
    f = profile if callable(profile) else (lambda k, arr=list(profile): arr[k])
    g_rev = [f(r - k) for k in range(0, r)]          # g(0..r-1)
    x = [0.0] + [g_rev[k] - g_rev[k - 1] for k in range(1, r)]
    N = r - 1
    lam = [0.0] + [S[r - n] for n in range(1, N + 1)]
    lhs = sum(lam[n] * sum(x[1:n + 1]) ** 2 for n in range(1, N + 1))
    rhs = 4.0 * sum((sum(lam[n:N + 1]) ** 2 / lam[n]) * x[n] ** 2
                    for n in range(1, N + 1) if lam[n] > 0)
    return lhs, rhs


# ---------------------------------------------------------------------------
# homogeneous fast paths for the regular tree (infinite-graph values)
# ---------------------------------------------------------------------------

def tree_sphere_size(d: int, k: int) -> int:
    return 1 if k == 0 else d * (d - 1) ** (k - 1)


def tree_pyramid_c2(d: int, r: int) -> float:
    """Closed-form per-center mass on the infinite d-regular tree."""
    return 1.0 + sum(((r - k) / r) ** 2 * tree_sphere_size(d, k)
                     for k in range(1, r))


def tree_pyramid_diagonal(d: int, r: int) -> float:
    """Diagonal entry of C^(r) at any vertex of the infinite d-regular tree.

    On a vertex-transitive graph eta^2 = 1 and psi_u = chi_u / c_r, so the
    diagonal is an explicit finite sum over the ball of radius r+1, which a
    rooted tree truncation of depth r+1 realizes exactly.
    """
    ball_graph = build_regular_tree(d, r + 1)
    c2 = tree_pyramid_c2(d, r)
    dist_v = ball_graph.distances_from(ball_graph.root)
    total = 0.0
    for x in ball_graph.adjacency[ball_graph.root]:
        dist_x = ball_graph.distances_from(x)
        for u in range(ball_graph.vertex_count):
            du_v = dist_v[u]
            du_x = dist_x[u]
            cv = (r - du_v) / r if du_v <= r else 0.0
            cx = (r - du_x) / r if du_x <= r else 0.0
            total += (cx - cv) ** 2
    return 2.0 * total / c2


def _annuli_psi_by_level(r: int, max_level: int):
    """Table psi[k, l] of the normalized annuli weight of ring k at level l."""
    norm2 = np.array([
        sum(((r - abs(l - k)) / r) ** 2
            for k in range(max(0, l - r + 1), l + r))
        for l in range(max_level + 1)])
    p_tab = np.zeros((max_level + r + 1, max_level + 1))
    for k in range(max_level + r + 1):
        for l in range(max(0, k - r + 1), min(max_level + 1, k + r)):
            p_tab[k, l] = ((r - abs(l - k)) / r) / math.sqrt(norm2[l])
    return p_tab


def tree_annuli_component(d: int, r: int, first_level: int, length: int,
                          psi_tab=None) -> np.ndarray:
    """Section of the annuli C^(r) on one radial component of the tree.

    The component living on levels first_level .. first_level+length-1 sees
    C^(r) as -2 sum_k [T, P_k]^2 with T the component's off-diagonal part
    and P_k the diagonal annuli weights; the result is pentadiagonal PSD.
    The commutator square is assembled two levels past the section and then
    sliced, so every returned entry is exact for the infinite component.
    """
    pad = 2
    full = length + pad
    if psi_tab is None:
        psi_tab = _annuli_psi_by_level(r, first_level + full + r)
    a = np.array([math.sqrt(d) if (first_level == 0 and j == 1)
                  else math.sqrt(d - 1) for j in range(1, full)])
    levels = np.arange(first_level, first_level + full)
    diag = np.zeros(full)
    super2 = np.zeros(full - 2)
    for k in range(max(0, first_level - r + 1), first_level + full + r):
        pk = psi_tab[k, levels]
        w = a * (pk[1:] - pk[:-1])
        if not np.any(w):
            continue
        # B = U - U^T with upper-bidiagonal weights w, so
        # B^2 has diagonal -(w_{i-1}^2 + w_i^2) and second diagonals w_i w_{i+1}
        diag[:-1] += 2.0 * w * w
        diag[1:] += 2.0 * w * w
        super2 -= 2.0 * w[:-1] * w[1:]
    C = np.diag(diag) + np.diag(super2, 2) + np.diag(super2, -2)
    return C[:length, :length]


def tree_annuli_sections(d: int, r: int, level_cut: int):
    """(component section, multiplicity) pairs of C^(r) up to a level cut."""
    psi_tab = _annuli_psi_by_level(r, level_cut + r + 2)
    out = []
    for n in range(1, level_cut + 2):
        first = n - 1
        length = level_cut - first + 1
        mult = 1 if n == 1 else \
            tree_sphere_size(d, n - 1) - tree_sphere_size(d, n - 2)
        out.append((tree_annuli_component(d, r, first, length, psi_tab), mult))
    return out


def tree_annuli_commutator_norm(d: int, r: int, depth_cut: int = 64,
                                components: int = 24) -> float:
    """Norm of the annuli-partition C^(r) on the infinite d-regular tree.

    Radial multiplication operators commute with the spherical
    decomposition, so C^(r) block-diagonalizes into pentadiagonal matrices
    over the half-line components; the norm is the sup over components.
    Finite sections of each component are monotone lower bounds, already
    converged at the default cut.
    """
    psi_tab = _annuli_psi_by_level(r, depth_cut + r + 2)
    best = 0.0
    for n in range(1, components + 1):
        first = n - 1
        length = depth_cut - first + 1
        if length < 3:
            break
        C = tree_annuli_component(d, r, first, length, psi_tab)
        lams = eig_sym_dense(C)
        best = max(best, float(np.max(np.abs(lams))))
    return best
