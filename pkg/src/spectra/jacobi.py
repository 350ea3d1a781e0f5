"""Half-line Jacobi matrices: tails, limit patterns, spherical decomposition.

A Jacobi matrix is given by 1-indexed coefficient sequences a (positive,
off-diagonal) and b (real, diagonal), either as finite arrays or as rules
evaluable at any index.  Tails, right limits (two-sided recurring windows)
and strong limits of tails (recurring tail prefixes) are the 1-d
counterparts of the graph limit machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operators import COMBINATORIAL, SchrodingerOperator


def _rule_to_fn(rule):
    kind = rule["rule"]
    if kind == "constant":
        c = float(rule["c"])
        return lambda k: c
    if kind == "explicit":
        vals = [float(x) for x in rule["values"]]
        def fn(k):
            if not (1 <= k <= len(vals)):
                raise IndexError(f"explicit rule has no index {k}")
            return vals[k - 1]
        return fn
    if kind == "tree":
        d = float(rule["d"])
        ra, rb = math.sqrt(d), math.sqrt(d - 1)
        return lambda k: ra if k == 1 else rb
    if kind == "sparse-squares":
        alpha = float(rule["alpha"])
        def fn(k):
            m = k - 1
            r = int(round(math.sqrt(m))) if m >= 1 else 0
            return alpha if m >= 1 and r * r == m else 0.0
        return fn
    raise ValueError(f"unknown jacobi rule {kind!r}")


@dataclass(frozen=True)
class JacobiMatrix:
    """Jacobi matrix from 1-indexed coefficient callables.

    ``length`` is None for rule-generated (semi-infinite) matrices.  The
    boundedness condition sup(|a| + |b| + 1/a) < infinity is spot-checked on
    the first indices at construction.
    """

    a_fn: object
    b_fn: object
    length: int = None

    def __post_init__(self):
        probe = range(1, min(self.length or 200, 200) + 1)
        for k in probe:
            ak = self.a(k) if (self.length is None or k < self.length) else None
            if ak is not None and not (0 < ak < 1e12):
                raise ValueError(f"off-diagonal a_{k} = {ak} not positive/bounded")
            if abs(self.b(k)) > 1e12:
                raise ValueError(f"diagonal b_{k} unbounded")

    @classmethod
    def from_arrays(cls, a, b):
        a = [float(x) for x in a]
        b = [float(x) for x in b]
        if len(a) != len(b) - 1:
            raise ValueError("need len(a) == len(b) - 1")
        return cls(a_fn=lambda k: a[k - 1], b_fn=lambda k: b[k - 1],
                   length=len(b))

    @classmethod
    def from_rules(cls, a_rule, b_rule, length=None):
        return cls(a_fn=_rule_to_fn(a_rule), b_fn=_rule_to_fn(b_rule),
                   length=length)

    def a(self, k: int) -> float:
        if k < 1 or (self.length is not None and k >= self.length):
            raise IndexError(f"a index {k} out of range")
        return float(self.a_fn(k))

    def b(self, k: int) -> float:
        if k < 1 or (self.length is not None and k > self.length):
            raise IndexError(f"b index {k} out of range")
        return float(self.b_fn(k))

    def coefficients(self, n: int):
        """First n levels as arrays (a of length n-1, b of length n)."""
        if self.length is not None and n > self.length:
            raise IndexError("truncation longer than the matrix")
        a = np.array([self.a(k) for k in range(1, n)])
        b = np.array([self.b(k) for k in range(1, n + 1)])
        return a, b


def tail(j: JacobiMatrix, k: int) -> JacobiMatrix:
    """k-th tail: entries (i, j) of the result are (i+k, j+k) of the input."""
    if k < 0:
        raise ValueError("tail index must be >= 0")
    if j.length is not None and k >= j.length:
        raise IndexError("tail index out of range")
    if k == 0:
        return j
    newlen = None if j.length is None else j.length - k
    return JacobiMatrix(a_fn=lambda i: j.a_fn(i + k),
                        b_fn=lambda i: j.b_fn(i + k), length=newlen)


# ---------------------------------------------------------------------------
# limit-pattern detection in 1d
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TwoSidedPattern:
    """Two-sided window (a at half-integer offsets, b at integer offsets)."""

    offsets: tuple        # b offsets relative to the window center
    a: tuple              # a[i] couples offsets[i] and offsets[i] + 1
    b: tuple
    witnesses: tuple      # center positions where the window was observed

    def b_at(self, offset: int):
        try:
            return self.b[self.offsets.index(offset)]
        except ValueError:
            return None


@dataclass(frozen=True)
class OneSidedPattern:
    a: tuple
    b: tuple
    witnesses: tuple      # tail offsets where the prefix was observed


def _quantize(arr, q):
    return tuple(int(round(x / q)) for x in arr)


def jacobi_right_limits(j: JacobiMatrix, window: int, eps: float,
                        scan_start=None, scan_count=2000,
                        min_recurrence=3):
    """Recurring two-sided coefficient windows (right-limit candidates).

    Windows are aligned on their first off-background feature so that
    translates of one limit operator collapse to a single pattern; windows
    whose features sit too close to the edge are skipped as ambiguous.
    When features are dense (no meaningful background), raw windows are
    clustered without alignment, which is what a periodic sequence needs.
    """
    h = max(window // 2, 1)
    if scan_start is None:
        scan_start = 4 * h + 10
    centers = range(scan_start, scan_start + scan_count)
    b_samples = np.array([j.b(c) for c in centers])
    a_samples = np.array([j.a(c) for c in centers])
    b_bg = float(np.median(b_samples))
    a_bg = float(np.median(a_samples))
    feature_frac = float(np.mean(np.abs(b_samples - b_bg) > eps))

    q = eps / 10.0
    clusters = {}
    for c in centers:
        b_win = [j.b(c + o) for o in range(-h, h + 1)]
        a_win = [j.a(c + o) for o in range(-h, h)]
        if feature_frac <= 0.25:
            feats = [i for i, x in enumerate(b_win) if abs(x - b_bg) > eps]
            feats += [i for i, x in enumerate(a_win) if abs(x - a_bg) > eps]
            if feats:
                first = min(feats)
                shift = first - h
                margin = max(1, h // 2)
                if first < margin or first > 2 * h - margin:
                    continue    # feature too close to the edge
                b_win = [j.b(c + shift + o) for o in range(-h, h + 1)]
                a_win = [j.a(c + shift + o) for o in range(-h, h)]
                center = c + shift
            else:
                center = c
        else:
            center = c
        key = (_quantize(a_win, q), _quantize(b_win, q))
        clusters.setdefault(key, []).append((center, a_win, b_win))

    patterns = []
    for key, group in sorted(clusters.items()):
        witnesses = sorted({c for c, _, _ in group})
        if len(witnesses) < min_recurrence:
            continue
        _, a_win, b_win = group[0]
        patterns.append(TwoSidedPattern(
            offsets=tuple(range(-h, h + 1)),
            a=tuple(a_win), b=tuple(b_win),
            witnesses=tuple(witnesses)))
    patterns.sort(key=lambda p: (-len(p.witnesses), p.b))
    return patterns


def strong_limits_of_tails(j: JacobiMatrix, depth: int, eps: float,
                           scan_count=3000, min_recurrence=3):
    """Recurring tail prefixes of length ``depth`` (strong-limit candidates)."""
    q = eps / 10.0
    clusters = {}
    for t in range(scan_count):
        a_pre = [j.a(t + k) for k in range(1, depth)]
        b_pre = [j.b(t + k) for k in range(1, depth + 1)]
        key = (_quantize(a_pre, q), _quantize(b_pre, q))
        clusters.setdefault(key, []).append((t, a_pre, b_pre))
    patterns = []
    for key, group in sorted(clusters.items()):
        if len(group) < min_recurrence:
            continue
        t0, a_pre, b_pre = group[0]
        patterns.append(OneSidedPattern(
            a=tuple(a_pre), b=tuple(b_pre),
            witnesses=tuple(t for t, _, _ in group)))
    patterns.sort(key=lambda p: (-len(p.witnesses), p.b))
    return patterns


# ---------------------------------------------------------------------------
# spherical decomposition of spherically symmetric tree operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SphericalDecomposition:
    components: tuple      # ((a, b) arrays as JacobiMatrix, multiplicity)
    total_dimension: int

    def eigenvalue_multiset(self):
        """All eigenvalues with multiplicities, sorted ascending."""
        from .eigensolve import eig_sym_tridiag

        out = []
        for jm, mult in self.components:
            a, b = jm.coefficients(jm.length)
            lams = eig_sym_tridiag(a, b) if jm.length > 1 else np.array([jm.b(1)])
            out.extend(list(lams) * mult)
        return np.sort(np.array(out))


class SphericalSymmetryError(ValueError):
    """Operator is not spherically symmetric around the root."""


def spherical_decompose(h: SchrodingerOperator, depth: int) -> SphericalDecomposition:
    """Decompose H restricted to B_depth(root) into radial Jacobi components.

    Requires level-uniform branching and a level-constant diagonal (both the
    potential and, for the Laplacian convention, the degree term).  The
    component starting at level n-1 appears with multiplicity
    S(n-1) - S(n-2), obtained by dimension counting; the decomposition is
    validated downstream by the eigenvalue-multiset oracle.
    """
    g = h.graph
    dist = g.distances_from(g.root)
    if depth > max(dist.values()):
        raise ValueError("depth exceeds the tree")
    levels = [[] for _ in range(depth + 1)]
    for v, dv in dist.items():
        if dv <= depth:
            levels[dv].append(v)

    diag = h.diagonal()
    q_eff = np.zeros(depth + 1)
    kappa = np.zeros(depth, dtype=int)
    for ell in range(depth + 1):
        vals = {round(float(diag[v]), 12) for v in levels[ell]}
        if len(vals) != 1:
            raise SphericalSymmetryError(
                f"diagonal not constant on sphere at level {ell}")
        q_eff[ell] = diag[levels[ell][0]]
        if ell < depth:
            counts = set()
            for v in levels[ell]:
                children = sum(1 for u in g.adjacency[v] if dist[u] == ell + 1)
                parents = sum(1 for u in g.adjacency[v] if dist[u] == ell - 1)
                others = len(g.adjacency[v]) - children - parents
                if others:
                    raise SphericalSymmetryError(
                        f"vertex {v} has same-level edges; not a tree ball")
                counts.add(children)
            if len(counts) != 1:
                raise SphericalSymmetryError(
                    f"branching not uniform at level {ell}")
            kappa[ell] = counts.pop()
            if kappa[ell] < 1:
                raise SphericalSymmetryError(
                    f"level {ell} has childless vertices below depth")

    sphere = [len(lv) for lv in levels]
    components = []
    for n in range(1, depth + 2):
        mult = 1 if n == 1 else sphere[n - 1] - sphere[n - 2]
        if mult == 0:
            continue
        if mult < 0:
            raise SphericalSymmetryError("sphere sizes decreased")
        first = n - 1
        length = depth - first + 1
        a = [math.sqrt(kappa[first + k - 1]) for k in range(1, length)]
        b = [q_eff[first + k - 1] for k in range(1, length + 1)]
        components.append((JacobiMatrix.from_arrays(a, b), mult))

    total = sum(jm.length * m for jm, m in components)
    if total != sum(sphere):
        raise SphericalSymmetryError("dimension count failed")
    return SphericalDecomposition(components=tuple(components),
                                  total_dimension=total)
