"""Closed-form Borel transforms, rank-one perturbations, root certificates.

All square roots use one branch rule: sqrt(z^2 - c) is taken asymptotic to z
at infinity, which makes every m-function here Herglotz on the upper half
plane and normalized to -1/z + O(1/z^2).  Resolvent oracles go through the
banded linear solver, never through the eigensolver, so closed forms and
truncated-matrix numerics are genuinely independent.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .eigensolve import (SpectrumApproximation, cluster_intervals,
                         eigvals_tridiag_sturm, solve_tridiag_shifted)

ISOLATED_POINT = "ISOLATED_POINT"
NOT_IN_SPECTRUM = "NOT_IN_SPECTRUM"


@dataclass(frozen=True)
class EigenvalueCertificate:
    value: float
    kind: str
    witness: float

    def __post_init__(self):
        if self.kind == ISOLATED_POINT:
            if not self.witness < 1e-12:
                raise ValueError(f"root residual {self.witness} too large")
        elif self.kind == NOT_IN_SPECTRUM:
            if not self.witness > 0:
                raise ValueError("non-membership needs a positive witness")
        else:
            raise ValueError(f"unknown certificate kind {self.kind!r}")


def sqrt_asymptotic(z, c):
    """Branch of sqrt(z^2 - c) that behaves like z for large |z|."""
    z = complex(z)
    s = cmath.sqrt(z * z - c)
    if (z.conjugate() * s).real < 0:
        s = -s
    return s


def _require_off_cut(z, edge):
    z = complex(z)
    if z.imag == 0 and abs(z.real) <= edge:
        raise ValueError(f"z = {z} lies on the spectral cut [-{edge}, {edge}]")


def m_halfline_free(z):
    """Borel transform of the free half-line adjacency at the first site."""
    _require_off_cut(z, 2.0)
    return (-z + sqrt_asymptotic(z, 4.0)) / 2.0


def m_line_free(z):
    """Borel transform of the free two-sided line adjacency at one site."""
    _require_off_cut(z, 2.0)
    return -1.0 / sqrt_asymptotic(z, 4.0)


def m_tree(z, d: int):
    """Borel transform of the d-regular tree adjacency at the root."""
    _require_off_cut(z, 2.0 * math.sqrt(d - 1))
    return -2.0 * (d - 1) / ((d - 2) * z + d * sqrt_asymptotic(z, 4.0 * (d - 1)))


def m_line_scaled(z, d: int):
    """m of sqrt(d-1) * A_Z, the free-line right limit on the tree."""
    _require_off_cut(z, 2.0 * math.sqrt(d - 1))
    return -1.0 / sqrt_asymptotic(z, 4.0 * (d - 1))


def m_halfline_scaled(z, d: int):
    """m of sqrt(d-1) * A_N, the free-half-line strong limit on the tree."""
    _require_off_cut(z, 2.0 * math.sqrt(d - 1))
    return (-z + sqrt_asymptotic(z, 4.0 * (d - 1))) / (2.0 * (d - 1))


def rank_one_transform(F, alpha: float):
    """Pointwise map F -> F / (1 + alpha F) of rank-one perturbation."""
    def F_alpha(z):
        f = F(z)
        denom = 1.0 + alpha * f
        if denom == 0:
            raise ZeroDivisionError(
                f"pole of the perturbed m-function at z = {z} "
                "(candidate eigenvalue)")
        return f / denom
    return F_alpha


# ---------------------------------------------------------------------------
# discrete eigenvalues from pole conditions
# ---------------------------------------------------------------------------

def pole_line_scaled(alpha: float, d: int) -> EigenvalueCertificate:
    """Discrete eigenvalue of sqrt(d-1) A_Z + alpha <delta_0, .> delta_0."""
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    z0 = math.copysign(math.sqrt(alpha * alpha + 4.0 * (d - 1)), alpha)
    witness = abs(1.0 + alpha * m_line_scaled(z0, d))
    return EigenvalueCertificate(value=z0, kind=ISOLATED_POINT, witness=witness)


def pole_halfline_scaled(alpha: float, d: int) -> EigenvalueCertificate:
    """Discrete eigenvalue of sqrt(d-1) A_N + alpha <delta_1, .> delta_1."""
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    z1 = alpha + (d - 1) / alpha
    witness = abs(1.0 + alpha * m_halfline_scaled(z1, d))
    return EigenvalueCertificate(value=z1, kind=ISOLATED_POINT, witness=witness)


def solve_zk(k: int, d: int, alpha: float) -> EigenvalueCertificate:
    """Discrete eigenvalue of the alpha-bump-at-site-k half-line limit.

    Solves f_k(x) = x (1 + x^2 + ... + x^(2k-2)) = sqrt(d-1)/alpha by
    monotone bisection (f_k is strictly increasing on the reals) and maps
    the root to z_k = sqrt(d-1) (x + 1/x).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    beta = math.sqrt(d - 1) / alpha

    def f(x):
        return x * sum(x ** (2 * j) for j in range(k))

    hi = max(1.0, abs(beta)) + 1.0
    lo = -hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < beta:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16 * max(1.0, abs(hi)):
            break
    xk = 0.5 * (lo + hi)
    zk = math.sqrt(d - 1) * (xk + 1.0 / xk)
    return EigenvalueCertificate(value=zk, kind=ISOLATED_POINT,
                                 witness=abs(f(xk) - beta))


def star_eigenvalue(k: int) -> EigenvalueCertificate:
    """Isolated eigenvalue k/sqrt(k-1) of the k-ray star graph adjacency.

    Root condition z + k m_N(z) = 0 from coefficient stripping of the
    radial Jacobi component with first weight sqrt(k).
    """
    if k < 3:
        raise ValueError("need k >= 3")
    z0 = k / math.sqrt(k - 1)
    witness = abs(z0 + k * m_halfline_free(z0))
    return EigenvalueCertificate(value=z0, kind=ISOLATED_POINT, witness=witness)


def certify_counterexample_gap(d: int) -> EigenvalueCertificate:
    """Certificate that lambda = d is not in the spectrum of A on the
    half-line-joined-to-tree graph.

    The junction m-function is m_T / (1 - m_T m_N); at z = d both factors
    are real and the denominator 1 - (d-1)(d - sqrt(d^2-4)) / (2d(d-2)) is
    nonzero because d^2 - 4 is never a perfect square, so no point mass can
    sit at d.
    """
    if d < 3:
        raise ValueError("need integer d >= 3")
    s = math.isqrt(d * d - 4)
    if s * s == d * d - 4:
        raise AssertionError("d^2 - 4 is a perfect square; impossible for d > 2")
    witness = abs(1.0 - (d - 1) * (d - math.sqrt(d * d - 4.0)) / (2.0 * d * (d - 2)))
    return EigenvalueCertificate(value=float(d), kind=NOT_IN_SPECTRUM,
                                 witness=witness)


# ---------------------------------------------------------------------------
# resolvent oracles (banded solves on truncated matrix models)
# ---------------------------------------------------------------------------

def resolvent_tridiag(a, b, z, index: int = 0):
    """<delta_index, (T - z)^{-1} delta_index> by banded elimination."""
    n = len(b)
    rhs = np.zeros(n)
    rhs[index] = 1.0
    x = solve_tridiag_shifted(np.asarray(a, dtype=float),
                              np.asarray(b, dtype=float), z, rhs)
    return complex(x[index])


def oracle_m_halfline_free(z, n=5000):
    return resolvent_tridiag(np.ones(n - 1), np.zeros(n), z, 0)


def oracle_m_line_free(z, half=2500):
    n = 2 * half + 1
    return resolvent_tridiag(np.ones(n - 1), np.zeros(n), z, half)


def oracle_m_halfline_scaled(z, d, n=5000):
    r = math.sqrt(d - 1)
    return resolvent_tridiag(np.full(n - 1, r), np.zeros(n), z, 0)


def oracle_m_line_scaled(z, d, half=2500):
    r = math.sqrt(d - 1)
    n = 2 * half + 1
    return resolvent_tridiag(np.full(n - 1, r), np.zeros(n), z, half)


def oracle_m_tree(z, d, depth=4000):
    """Tree-root resolvent via the radial component (a_1 = sqrt(d))."""
    a = np.full(depth - 1, math.sqrt(d - 1))
    a[0] = math.sqrt(d)
    return resolvent_tridiag(a, np.zeros(depth), z, 0)


def oracle_m_junction(z, d, depth=12):
    """Resolvent of the half-line-joined-to-tree graph at the junction.

    Radial reduction: the graph is a weighted path
    line_depth .. line_1, junction, tree-sphere_1 .. tree-sphere_depth with
    weights 1 on the line side and sqrt(d), sqrt(d-1), ... on the tree
    side.  Exact for the truncation; exponentially accurate off spectrum.
    """
    n = 2 * depth + 1
    a = np.ones(n - 1)
    a[depth] = math.sqrt(d)
    a[depth + 1:] = math.sqrt(d - 1)
    return resolvent_tridiag(a, np.zeros(n), z, depth)


# ---------------------------------------------------------------------------
# comb graph: direct-integral sweep over the fiber parameter
# ---------------------------------------------------------------------------

def comb_edge(theta: float) -> float:
    """Magnitude of the fiber operator's discrete eigenvalue, 2 sqrt(1+cos^2)."""
    c = math.cos(theta)
    return 2.0 * math.sqrt(1.0 + c * c)


def _extreme_eigs_center_perturbed(n: int, center_vals):
    """(min, max) eigenvalues of free-line truncations with one perturbed
    center diagonal entry, vectorized over the perturbation values."""
    center = n // 2
    vals = np.asarray(center_vals, dtype=float)
    m = len(vals)

    def counts(xs):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            d = (vals if 0 == center else 0.0) - xs
            d = np.where(d == 0.0, -1e-300, d)
            cnt = (d < 0).astype(np.int64)
            for i in range(1, n):
                bi = vals - xs if i == center else -xs
                d = bi - 1.0 / d
                d = np.where(np.isnan(d), -1e-300, d)
                d = np.where(d == 0.0, -1e-300, d)
                cnt += d < 0
        return cnt

    lo0 = -2.0 - np.max(np.abs(vals)) - 1.0
    hi0 = 2.0 + np.max(np.abs(vals)) + 1.0
    out = []
    for which in ("min", "max"):
        lo = np.full(m, lo0)
        hi = np.full(m, hi0)
        target = np.zeros(m, dtype=np.int64) if which == "min" \
            else np.full(m, n - 1, dtype=np.int64)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            above = counts(mid) > target
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
            if np.max(hi - lo) < 1e-12:
                break
        out.append(0.5 * (lo + hi))
    return out[0], out[1]


def comb_sweep(theta_grid, n: int, gap_threshold=0.05) -> SpectrumApproximation:
    """Union spectrum of the comb-graph fiber operators A_Z + 2 cos(theta) d0.

    Each fiber is a centered free-line truncation of odd size n with one
    perturbed diagonal entry; the union over the grid of the full spectrum
    at theta = grid[0] and every fiber's extreme eigenvalues is clustered
    into intervals.
    """
    if n % 2 == 0:
        raise ValueError("n must be odd (centered truncation)")
    thetas = np.asarray(list(theta_grid), dtype=float)
    center_vals = 2.0 * np.cos(thetas)
    lo, hi = _extreme_eigs_center_perturbed(n, center_vals)

    b0 = np.zeros(n)
    b0[n // 2] = center_vals[0]
    base = eigvals_tridiag_sturm(np.ones(n - 1), b0)
    eigs = np.sort(np.concatenate([base, lo, hi]))
    return SpectrumApproximation(
        eigenvalues=eigs,
        intervals=cluster_intervals(eigs, gap_threshold),
        truncation_radius=n // 2,
    )
