"""Self-contained symmetric eigensolvers and spectrum assembly.

Two independent eigenvalue engines are provided for real symmetric
tridiagonal matrices: bisection on Sturm sequences (vectorized over
eigenvalue indices, the default) and implicit-shift QL (a separate code
path, used as an oracle at small sizes).  Dense symmetric matrices are
reduced by Householder reflections first.  No external linear-algebra
routines are used outside the test suite.

All functions are pure; results are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operators import SchrodingerOperator, ball_matrix, weyl_residual

_EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# Sturm-sequence bisection
# ---------------------------------------------------------------------------

def sturm_counts(a, b, xs):
    """Number of eigenvalues of the tridiagonal (a off, b diag) below each x.

    Uses the inertia of the LDL^T factorization of T - x; zero pivots are
    nudged, which at worst moves a count boundary by one ulp.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    a2 = a * a
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        d = b[0] - xs
        d = np.where(d == 0.0, -1e-300, d)
        cnt = (d < 0).astype(np.int64)
        for i in range(1, len(b)):
            d = (b[i] - xs) - a2[i - 1] / d
            d = np.where(np.isnan(d), -1e-300, d)
            d = np.where(d == 0.0, -1e-300, d)
            cnt += d < 0
    return cnt


def _gershgorin(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    rad = np.zeros_like(b)
    if len(a):
        rad[:-1] += np.abs(a)
        rad[1:] += np.abs(a)
    return float(np.min(b - rad)), float(np.max(b + rad))


def eigvals_tridiag_sturm(a, b, tol=None):
    """All eigenvalues, ascending, by vectorized bisection."""
    b = np.asarray(b, dtype=float)
    a = np.asarray(a, dtype=float)
    n = len(b)
    if n == 1:
        return b.copy()
    lo0, hi0 = _gershgorin(a, b)
    scale = max(abs(lo0), abs(hi0), 1e-30)
    if tol is None:
        tol = 20 * _EPS * scale
    lo = np.full(n, lo0 - scale * 1e-12)
    hi = np.full(n, hi0 + scale * 1e-12)
    ks = np.arange(n)
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        above = sturm_counts(a, b, mid) > ks
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        if np.max(hi - lo) < tol:
            break
    return 0.5 * (lo + hi)


def eigvals_tridiag_window(a, b, lo, hi, tol=None):
    """Eigenvalues in the open interval (lo, hi), ascending."""
    b = np.asarray(b, dtype=float)
    a = np.asarray(a, dtype=float)
    n_lo = int(sturm_counts(a, b, [lo])[0])
    n_hi = int(sturm_counts(a, b, [hi])[0])
    if n_hi == n_lo:
        return np.empty(0)
    scale = max(abs(lo), abs(hi), 1.0)
    if tol is None:
        tol = 20 * _EPS * scale
    ks = np.arange(n_lo, n_hi)
    los = np.full(len(ks), float(lo))
    his = np.full(len(ks), float(hi))
    for _ in range(120):
        mid = 0.5 * (los + his)
        above = sturm_counts(a, b, mid) > ks
        his = np.where(above, mid, his)
        los = np.where(above, los, mid)
        if np.max(his - los) < tol:
            break
    return 0.5 * (los + his)


# ---------------------------------------------------------------------------
# implicit-shift QL (independent engine, used as small-size oracle)
# ---------------------------------------------------------------------------

def eigvals_tridiag_ql(a, b, max_sweeps=50):
    """All eigenvalues by implicit-shift QL; separate path from Sturm."""
    d = [float(x) for x in b]
    e = [float(x) for x in a] + [0.0]
    n = len(d)
    for l in range(n):
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > max_sweeps:
                raise RuntimeError("QL failed to converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                bb = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * bb
                p = s * r
                d[i + 1] = g + p
                g = c * r - bb
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.sort(np.asarray(d))


def eig_sym_tridiag(a, b, engine="sturm"):
    """Eigenvalues of the Jacobi matrix with off-diagonal a and diagonal b.

    a must be positive (Jacobi convention); ascending output.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(b) == 0:
        raise ValueError("empty matrix")
    if len(a) != len(b) - 1:
        raise ValueError("need len(a) == len(b) - 1")
    if len(a) and np.min(a) <= 0:
        raise ValueError("off-diagonal entries must be positive")
    if engine == "sturm":
        return eigvals_tridiag_sturm(a, b)
    if engine == "ql":
        return eigvals_tridiag_ql(a, b)
    raise ValueError(f"unknown engine {engine!r}")


# ---------------------------------------------------------------------------
# tridiagonal solves and inverse iteration
# ---------------------------------------------------------------------------

def solve_tridiag_shifted(a, b, z, rhs):
    """Solve (T - z) x = rhs for tridiagonal T by banded PLU with pivoting.

    Works for real or complex z / rhs; this is the independent linear-solve
    path used by the resolvent oracles.
    """
    n = len(b)
    dtype = np.result_type(np.asarray(b), np.asarray(rhs),
                           np.asarray(z), float)
    dl = np.asarray(a, dtype=dtype).copy()
    dd = np.asarray(b, dtype=dtype) - z
    du = np.asarray(a, dtype=dtype).copy()
    du2 = np.zeros(max(n - 2, 0), dtype=dtype)
    x = np.asarray(rhs, dtype=dtype).copy()
    for i in range(n - 1):
        if abs(dl[i]) > abs(dd[i]):
            dd[i], dl[i] = dl[i], dd[i]
            du_i = du[i]
            du[i] = dd[i + 1]
            dd[i + 1] = du_i
            if i < n - 2:
                du2[i] = du[i + 1]
                du[i + 1] = 0.0
            tmp = x[i]
            x[i] = x[i + 1]
            x[i + 1] = tmp
        if dd[i] == 0:
            dd[i] = 1e-300
        m = dl[i] / dd[i]
        dd[i + 1] = dd[i + 1] - m * du[i]
        if i < n - 2:
            du[i + 1] = du[i + 1] - m * du2[i]
        x[i + 1] = x[i + 1] - m * x[i]
    if dd[n - 1] == 0:
        dd[n - 1] = 1e-300
    x[n - 1] = x[n - 1] / dd[n - 1]
    if n > 1:
        x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / dd[n - 2]
    for i in range(n - 3, -1, -1):
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / dd[i]
    return x


def tridiag_eigenvectors(a, b, lams):
    """Inverse-iteration eigenvectors for given (computed) eigenvalues.

    Eigenvalues closer than a cluster tolerance get perturbed shifts and a
    Gram-Schmidt pass so that near-degenerate subspaces come out usable.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lams = np.asarray(lams, dtype=float)
    n = len(b)
    scale = max(np.max(np.abs(b)) if n else 0.0,
                np.max(np.abs(a)) if len(a) else 0.0, 1e-30)
    cluster_tol = 1e-7 * scale
    vecs = np.zeros((n, len(lams)))
    i = 0
    while i < len(lams):
        j = i
        while j + 1 < len(lams) and lams[j + 1] - lams[j] < cluster_tol:
            j += 1
        block = []
        for k in range(i, j + 1):
            shift = lams[k] + (k - i) * cluster_tol * 1e-2
            x = np.ones(n) / math.sqrt(n)
            for _ in range(3):
                x = solve_tridiag_shifted(a, b, shift, x)
                for y in block:
                    x = x - (y @ x) * y
                nx = np.linalg.norm(x)
                if nx == 0:
                    x = np.ones(n) / math.sqrt(n)
                else:
                    x = x / nx
            block.append(x)
        for k, x in zip(range(i, j + 1), block):
            vecs[:, k] = x
        i = j + 1
    return vecs


# ---------------------------------------------------------------------------
# dense path: Householder reduction
# ---------------------------------------------------------------------------

def householder_tridiagonalize(m):
    """Reduce a symmetric matrix to tridiagonal form; returns (diag, off, vs).

    vs is the list of Householder unit vectors, needed to transform
    tridiagonal eigenvectors back to the original basis.
    """
    A = np.array(m, dtype=float)
    n = A.shape[0]
    vs = []
    for k in range(n - 2):
        x = A[k + 1:, k].copy()
        nx = np.linalg.norm(x)
        if nx == 0.0 or np.linalg.norm(x[1:]) == 0.0:
            vs.append(None)
            continue
        alpha = -math.copysign(nx, x[0]) if x[0] != 0 else -nx
        v = x.copy()
        v[0] -= alpha
        v /= np.linalg.norm(v)
        A22 = A[k + 1:, k + 1:]
        p = A22 @ v
        K = p - (v @ p) * v
        A22 -= 2.0 * np.outer(v, K) + 2.0 * np.outer(K, v)
        A[k + 1, k] = A[k, k + 1] = alpha
        A[k + 2:, k] = 0.0
        A[k, k + 2:] = 0.0
        vs.append(v)
    return np.diag(A).copy(), np.diag(A, -1).copy(), vs


def _apply_back_transform(vs, X):
    for k in range(len(vs) - 1, -1, -1):
        v = vs[k]
        if v is None:
            continue
        X[k + 1:, :] -= 2.0 * np.outer(v, v @ X[k + 1:, :])
    return X


def eig_sym_dense(m, vectors=False, sym_tol=1e-12):
    """Full spectrum of a dense symmetric matrix (ascending).

    With vectors=True also returns an orthonormal eigenvector matrix whose
    columns satisfy ||M v - lambda v|| <= 1e-10 ||M||.
    """
    M = np.asarray(m, dtype=float)
    n = M.shape[0]
    scale = max(float(np.max(np.abs(M))) if n else 0.0, 1e-30)
    if M.shape != (n, n) or float(np.max(np.abs(M - M.T))) > sym_tol * max(scale, 1.0):
        raise ValueError("matrix is not symmetric within tolerance")
    if n == 1:
        lam = M.astype(float).reshape(1)
        return (lam, np.ones((1, 1))) if vectors else lam
    diag, off, vs = householder_tridiagonalize(M)
    # signs of the off-diagonal do not affect eigenvalues
    lams = eigvals_tridiag_sturm(np.abs(off), diag)
    if not vectors:
        return lams
    V = tridiag_eigenvectors(off, diag, lams)
    V = _apply_back_transform(vs, V)
    V /= np.linalg.norm(V, axis=0, keepdims=True)
    # one residual-driven polish pass
    for k in range(n):
        r = M @ V[:, k] - lams[k] * V[:, k]
        if np.linalg.norm(r) > 1e-10 * scale:
            lams_k = float(V[:, k] @ M @ V[:, k])
            lams[k] = lams_k
    order = np.argsort(lams)
    return lams[order], V[:, order]


def spectral_norm(m, iters=300, tol=1e-10):
    """Operator 2-norm of a symmetric matrix by power iteration."""
    M = np.asarray(m, dtype=float)
    n = M.shape[0]
    if n == 0:
        return 0.0
    x = np.ones(n) / math.sqrt(n)
    prev = 0.0
    for _ in range(iters):
        y = M @ x
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0
        x = y / ny
        if abs(ny - prev) < tol * max(ny, 1e-30):
            break
        prev = ny
    return float(abs(x @ (M @ x)))


# ---------------------------------------------------------------------------
# Lanczos with full reorthogonalization (large sparse truncations)
# ---------------------------------------------------------------------------

def lanczos_extreme(matvec, n, start, iters=200):
    """Extreme eigenvalues (min, max) of a symmetric operator via Lanczos.

    Full reorthogonalization; deterministic given the start vector.
    """
    k = min(iters, n)
    Q = np.zeros((n, k))
    alphas = np.zeros(k)
    betas = np.zeros(max(k - 1, 0))
    q = np.asarray(start, dtype=float)
    q = q / np.linalg.norm(q)
    Q[:, 0] = q
    u = matvec(q)
    alphas[0] = q @ u
    r = u - alphas[0] * q
    for i in range(1, k):
        r -= Q[:, :i] @ (Q[:, :i].T @ r)
        beta = np.linalg.norm(r)
        if beta < 1e-13:
            alphas = alphas[:i]
            betas = betas[:i - 1]
            break
        q = r / beta
        Q[:, i] = q
        u = matvec(q)
        alphas[i] = q @ u
        betas[i - 1] = beta
        r = u - alphas[i] * q - beta * Q[:, i - 1]
    lams = eigvals_tridiag_sturm(betas, alphas)
    return float(lams[0]), float(lams[-1])


# ---------------------------------------------------------------------------
# spectrum approximation with gap clustering
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumApproximation:
    eigenvalues: np.ndarray
    intervals: tuple
    truncation_radius: int
    residual_certificates: np.ndarray = None
    stability: tuple = ()

    @property
    def hull(self):
        return (float(self.eigenvalues[0]), float(self.eigenvalues[-1]))


def cluster_intervals(eigs, gap_threshold):
    """Disjoint ordered intervals covering the eigenvalues; gaps split."""
    eigs = np.sort(np.asarray(eigs, dtype=float))
    if len(eigs) == 0:
        return ()
    intervals = []
    lo = hi = eigs[0]
    for x in eigs[1:]:
        if x - hi > gap_threshold:
            intervals.append((float(lo), float(hi)))
            lo = x
        hi = x
    intervals.append((float(lo), float(hi)))
    return tuple(intervals)


def hausdorff_distance(xs, ys):
    """Hausdorff distance between two finite nonempty point sets."""
    xs = np.sort(np.asarray(xs, dtype=float))
    ys = np.sort(np.asarray(ys, dtype=float))

    def one_sided(a, b):
        idx = np.searchsorted(b, a)
        best = np.full(len(a), np.inf)
        inside = (idx > 0)
        best[inside] = np.abs(a[inside] - b[idx[inside] - 1])
        inside = (idx < len(b))
        best[inside] = np.minimum(best[inside], np.abs(a[inside] - b[idx[inside]]))
        return float(np.max(best))

    return max(one_sided(xs, ys), one_sided(ys, xs))


def default_gap_threshold(eigs):
    """Ten times the mean finite-section spacing of the spectral diameter."""
    eigs = np.asarray(eigs, dtype=float)
    if len(eigs) < 2:
        return 1e-12
    diam = float(eigs[-1] - eigs[0])
    return 10.0 * diam / len(eigs) if diam > 0 else 1e-12


def spectrum_approx(h: SchrodingerOperator, center: int, radii,
                    gap_threshold=None, certificates=False,
                    dense_limit=4000) -> SpectrumApproximation:
    """Finite-section spectrum of H from growing metric balls.

    Eigenvalues come from the largest ball; the stability entry r reports
    the Hausdorff distance between consecutive radii's eigenvalue sets.
    """
    radii = list(radii)
    if radii != sorted(radii):
        raise ValueError("radii must be increasing")
    ecc = h.graph.eccentricity(center)
    if radii[-1] > ecc:
        raise ValueError("largest radius exceeds the graph")
    previous = None
    stability = []
    for r in radii:
        view, m = ball_matrix(h, center, r)
        if len(view) > dense_limit:
            raise ValueError(
                f"ball of {len(view)} vertices exceeds dense_limit; "
                "use lanczos_extreme for hull estimates")
        lams = eig_sym_dense(m)
        if previous is not None:
            stability.append(hausdorff_distance(previous, lams))
        previous = lams
        last = (view, m, lams)
    view, m, lams = last
    certs = None
    if certificates:
        diag, off, vs = householder_tridiagonalize(m)
        V = tridiag_eigenvectors(off, diag, lams)
        V = _apply_back_transform(vs, V)
        certs = np.zeros(len(lams))
        full = np.zeros(h.graph.vertex_count)
        for k in range(len(lams)):
            full[:] = 0.0
            full[list(view.members)] = V[:, k]
            certs[k] = weyl_residual(h, full, lams[k])
    if gap_threshold is None:
        gap_threshold = default_gap_threshold(lams)
    return SpectrumApproximation(
        eigenvalues=lams,
        intervals=cluster_intervals(lams, gap_threshold),
        truncation_radius=radii[-1],
        residual_certificates=certs,
        stability=tuple(stability),
    )
