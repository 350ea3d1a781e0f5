"""Limit-operator candidates from recurring local patterns.

A pattern is the coherently-indexed ball matrix of H around a vertex,
reduced to a canonical form under root-preserving isomorphism: tree balls
go through the classic bottom-up certificate, everything else through
color refinement with individualization backtracking (our non-tree balls
carry tiny automorphism groups, so the search stays small).  Patterns that
recur along paths to infinity, away from the truncation frontier, are the
finite-radius surrogate of limit operators; their model spectra assemble
the essential-spectrum approximation.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field

import numpy as np

from .eigensolve import (SpectrumApproximation, cluster_intervals,
                         eig_sym_dense, eig_sym_tridiag, spectral_norm)
from .graphs import RootedGraph, ball, build_grid, build_regular_tree
from .operators import SchrodingerOperator, ball_matrix, matrix_on_view

ALL_DISTANCE_MAXIMAL = "ALL_DISTANCE_MAXIMAL"


class CanonicalizationBudgetError(RuntimeError):
    """Backtracking search exceeded its node budget (pathological ball)."""


# ---------------------------------------------------------------------------
# canonical forms of rooted weighted balls
# ---------------------------------------------------------------------------

def _tree_canonical(adj, labels):
    """Canonical (certificate, permutation) of a labeled tree rooted at 0.

    Children are ordered by their recursive certificates; the permutation
    lists vertices in canonical preorder.
    """
    n = len(adj)

    def cert(v, parent):
        kids = sorted(
            (cert(u, v) for u in adj[v] if u != parent),
        )
        return (labels[v], tuple(c for c, _ in kids)), \
            [v] + [x for _, sub in kids for x in sub]

    certificate, preorder = cert(0, -1)
    perm = [0] * n
    for pos, v in enumerate(preorder):
        perm[v] = pos
    return ("tree", n, certificate), perm


def _refine(adj, colors):
    n = len(colors)
    while True:
        keys = [(colors[i], tuple(sorted(colors[j] for j in adj[i])))
                for i in range(n)]
        palette = {k: c for c, k in enumerate(sorted(set(keys)))}
        new = [palette[k] for k in keys]
        if new == colors:
            return colors
        colors = new


def _certificate_from_discrete(adj, labels, colors):
    order = sorted(range(len(colors)), key=lambda i: colors[i])
    pos = {v: i for i, v in enumerate(order)}
    edges = tuple(sorted(
        (min(pos[u], pos[v]), max(pos[u], pos[v]))
        for v in range(len(adj)) for u in adj[v] if u < v))
    cert = ("gen", len(adj), tuple(labels[v] for v in order), edges)
    perm = [0] * len(adj)
    for i, v in enumerate(order):
        perm[v] = i
    return cert, perm


def _general_canonical(adj, labels, budget=200_000):
    """Backtracking individualization-refinement canonical form."""
    n = len(adj)
    counter = [0]

    def search(colors):
        counter[0] += 1
        if counter[0] > budget:
            raise CanonicalizationBudgetError(
                "canonical labeling budget exceeded")
        colors = _refine(adj, colors)
        by_color = {}
        for v, c in enumerate(colors):
            by_color.setdefault(c, []).append(v)
        target = None
        for c in sorted(by_color):
            if len(by_color[c]) > 1:
                target = by_color[c]
                break
        if target is None:
            return _certificate_from_discrete(adj, labels, colors)
        best = None
        for v in target:
            branched = [2 * c for c in colors]
            branched[v] += 1
            result = search(branched)
            if best is None or result[0] < best[0]:
                best = result
        return best

    init = [0] * n
    init[0] = -1   # the root is always fixed
    palette = {k: c for c, k in enumerate(sorted(set(zip(init, labels))))}
    return search([palette[(i0, l)] for i0, l in zip(init, labels)])


@dataclass(frozen=True)
class LocalPattern:
    """Canonical encoding of one radius of a local ball."""

    radius: int
    certificate: tuple
    canonical_matrix: np.ndarray = field(compare=False)

    @property
    def hash_hex(self) -> str:
        return hashlib.sha1(repr(self.certificate).encode()).hexdigest()[:16]


def local_pattern(h: SchrodingerOperator, v: int, r: int,
                  quantum: float) -> tuple:
    """(LocalPattern, canonical permutation) of the ball B_r(v) under H."""
    view, m = ball_matrix(h, v, r)
    n = len(view)
    adj = [[] for _ in range(n)]
    edge_count = 0
    for i in range(n):
        for j in range(i + 1, n):
            if m[i, j] != 0.0:
                adj[i].append(j)
                adj[j].append(i)
                edge_count += 1
    labels = [int(round(m[i, i] / quantum)) for i in range(n)]
    if edge_count == n - 1:
        cert, perm = _tree_canonical(adj, labels)
    else:
        cert, perm = _general_canonical(adj, labels)
    canon = np.zeros_like(m)
    idx = np.asarray(perm)
    canon[np.ix_(idx, idx)] = m
    return LocalPattern(radius=r, certificate=cert,
                        canonical_matrix=canon), perm


@dataclass(frozen=True)
class RLimitCandidate:
    patterns: tuple            # LocalPattern per radius 1..r_max
    witnesses: tuple           # vertex ids, increasing
    stability_count: int
    source: SchrodingerOperator = field(compare=False, repr=False)

    @property
    def max_radius(self) -> int:
        return self.patterns[-1].radius

    def report(self) -> dict:
        top = self.patterns[-1]
        return {
            "radius": top.radius,
            "witnesses": list(self.witnesses),
            "canonical_hash": top.hash_hex,
            "ball_size": int(top.canonical_matrix.shape[0]),
        }


@dataclass(frozen=True)
class DetectionResult:
    candidates: tuple
    diagnostics: dict

    def __iter__(self):
        return iter(self.candidates)

    def __len__(self):
        return len(self.candidates)

    def __getitem__(self, i):
        return self.candidates[i]


# ---------------------------------------------------------------------------
# paths to infinity (finite surrogate)
# ---------------------------------------------------------------------------

def _terminals(g: RootedGraph, dist):
    """Frontier vertices plus local distance maxima (inner path targets)."""
    local_max = [v for v in range(g.vertex_count)
                 if all(dist[u] <= dist[v] for u in g.adjacency[v])
                 and dist[v] > 0]
    return sorted(set(g.frontier_vertices()) | set(local_max))


def sample_paths(g: RootedGraph, strategy=ALL_DISTANCE_MAXIMAL,
                 seed: int = 0, count: int = 0):
    """Geodesic vertex sequences of strictly increasing distance from root.

    ALL_DISTANCE_MAXIMAL takes the deterministic parent chain to every
    frontier vertex and every local distance maximum; the random strategy
    samples ``count`` terminals and randomizes parent choices.
    """
    dist = g.distances_from(g.root)
    terms = _terminals(g, dist)
    rng = None
    if strategy != ALL_DISTANCE_MAXIMAL:
        rng = random.Random(seed)
        if count <= 0:
            raise ValueError("random strategy needs count > 0")
        terms = sorted(rng.sample(terms, min(count, len(terms))))

    paths = []
    for t in terms:
        chain = [t]
        v = t
        while dist[v] > 0:
            parents = [u for u in g.adjacency[v] if dist[u] == dist[v] - 1]
            v = rng.choice(parents) if rng is not None else min(parents)
            chain.append(v)
        paths.append(tuple(reversed(chain)))
    return paths


# ---------------------------------------------------------------------------
# detection
# ---------------------------------------------------------------------------

def detect_rlimits(h: SchrodingerOperator, paths, r_max: int, eps: float,
                   margin: int, min_witnesses: int = 3) -> DetectionResult:
    """Cluster recurring coherent local patterns along paths to infinity.

    Only vertices at boundary distance >= margin enter; a candidate needs
    the same canonical pattern family at every radius 1..r_max for at
    least ``min_witnesses`` distinct vertices, with canonical ball
    matrices within eps of each other in operator norm.
    """
    if margin < r_max:
        raise ValueError("margin must be at least r_max")
    g = h.graph
    bd = g.boundary_distances()
    eligible = sorted({v for p in paths for v in p if bd.get(v, 0) >= margin})
    diagnostics = {"eligible": len(eligible), "paths": len(paths)}
    if not eligible:
        return DetectionResult(candidates=(), diagnostics=diagnostics)

    quantum = eps / 10.0
    clusters = {}
    for v in eligible:
        family = []
        key = []
        for r in range(1, r_max + 1):
            pat, _ = local_pattern(h, v, r, quantum)
            family.append(pat)
            key.append(pat.certificate)
        clusters.setdefault(tuple(key), []).append((v, family))

    candidates = []
    rejected = 0
    for key, group in sorted(clusters.items(), key=lambda kv: kv[0]):
        if len(group) < min_witnesses:
            continue
        rep = group[0][1]
        ok = True
        for v, family in group[1:]:
            gap = spectral_norm(
                family[-1].canonical_matrix - rep[-1].canonical_matrix)
            if gap >= eps:
                ok = False
                break
        # coherence: smaller radii are nested corners of the largest ball
        for r in range(1, r_max):
            k = rep[r - 1].canonical_matrix.shape[0]
            view, m = ball_matrix(h, group[0][0], r_max)
            if not np.array_equal(m[:k, :k],
                                  ball_matrix(h, group[0][0], r)[1]):
                ok = False
                break
        if not ok:
            rejected += 1
            continue
        candidates.append(RLimitCandidate(
            patterns=tuple(rep),
            witnesses=tuple(sorted(v for v, _ in group)),
            stability_count=len(group),
            source=h))
    diagnostics["rejected"] = rejected
    candidates.sort(key=lambda c: (-c.stability_count,
                                   c.patterns[-1].certificate))
    return DetectionResult(candidates=tuple(candidates),
                           diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# reference patterns and model spectra
# ---------------------------------------------------------------------------

def reference_pattern(kind: str, r: int, d: int = 3, quantum=1e-10):
    """Canonical pattern of a known free-adjacency ball (line/tree/grid)."""
    if kind == "line":
        g = build_regular_tree(2, r)
    elif kind == "tree":
        g = build_regular_tree(d, r)
    elif kind == "grid":
        g = build_grid(2, r)
    else:
        raise ValueError(f"unknown reference {kind!r}")
    h = SchrodingerOperator(g, np.zeros(g.vertex_count))
    pat, _ = local_pattern(h, g.root, r, quantum)
    return pat


def candidate_spectrum(candidate: RLimitCandidate, model_radius: int,
                       gap_threshold: float = 0.05) -> SpectrumApproximation:
    """Finite-section spectrum of a model consistent with the pattern family.

    Recognized homogeneous free patterns (line, regular tree, planar grid)
    are extended to their natural models at ``model_radius``; anything else
    falls back to the witness's ball in the source graph.
    """
    r = candidate.max_radius
    top = candidate.patterns[-1]
    eigs = None
    for kind, ds in (("line", [0]), ("tree", range(3, 9)), ("grid", [0])):
        for d in ds:
            try:
                ref = reference_pattern(kind, r, d=d or 3)
            except Exception:
                continue
            if ref.certificate == top.certificate:
                if kind == "line":
                    n = 2 * model_radius + 1
                    eigs = eig_sym_tridiag(np.ones(n - 1), np.zeros(n))
                elif kind == "tree":
                    parts = []
                    for n0 in (1, 2, 3):
                        length = model_radius - n0 + 2
                        a = np.full(length - 1, math.sqrt(d - 1))
                        if n0 == 1:
                            a[0] = math.sqrt(d)
                        parts.append(eig_sym_tridiag(a, np.zeros(length)))
                    eigs = np.sort(np.concatenate(parts))
                else:
                    gm = build_grid(2, model_radius)
                    hm = SchrodingerOperator(gm, np.zeros(gm.vertex_count))
                    _, m = ball_matrix(hm, gm.root, model_radius)
                    eigs = eig_sym_dense(m)
                break
        if eigs is not None:
            break
    if eigs is None:
        h = candidate.source
        w = candidate.witnesses[0]
        radius = min(model_radius, h.graph.eccentricity(w))
        _, m = ball_matrix(h, w, radius)
        if m.shape[0] > 4000:
            raise ValueError("witness-ball model too large for dense solve")
        eigs = eig_sym_dense(m)
    return SpectrumApproximation(
        eigenvalues=eigs,
        intervals=cluster_intervals(eigs, gap_threshold),
        truncation_radius=model_radius)


def union_spectrum(candidates, model_radius: int,
                   gap_threshold: float = 0.05) -> SpectrumApproximation:
    """Merged interval decomposition over all candidates' model spectra."""
    candidates = list(candidates)
    if not candidates:
        raise ValueError("no candidates")
    eigs = np.sort(np.concatenate([
        candidate_spectrum(c, model_radius, gap_threshold).eigenvalues
        for c in candidates]))
    return SpectrumApproximation(
        eigenvalues=eigs,
        intervals=cluster_intervals(eigs, gap_threshold),
        truncation_radius=model_radius)


# ---------------------------------------------------------------------------
# transplant check (computational content of the inclusion theorem)
# ---------------------------------------------------------------------------

def transplant_residual(candidate: RLimitCandidate, eig_index: int,
                        target_witness: int):
    """Transplant a ball eigenvector between witnesses; return residuals.

    The eigenpair of the first witness's ball matrix is mapped through the
    canonical orderings onto another witness's ball and extended by zero;
    the result's Weyl residual in the full operator is bounded by the
    pattern distance plus the boundary leakage, which is what makes
    recurring patterns spectral witnesses.
    """
    from .operators import apply, weyl_residual

    h = candidate.source
    r = candidate.max_radius
    quantum = 1e-10
    w0 = candidate.witnesses[0]
    view0, m0 = ball_matrix(h, w0, r)
    _, perm0 = local_pattern(h, w0, r, quantum)
    lams, vecs = eig_sym_dense(m0, vectors=True)
    lam = float(lams[eig_index])
    v0 = vecs[:, eig_index]

    view1, m1 = ball_matrix(h, target_witness, r)
    _, perm1 = local_pattern(h, target_witness, r, quantum)
    canon_vec = np.zeros_like(v0)
    canon_vec[np.asarray(perm0)] = v0
    v1 = canon_vec[np.asarray(perm1)]

    full = np.zeros(h.graph.vertex_count)
    full[list(view1.members)] = v1
    residual = weyl_residual(h, full, lam)

    inner = np.linalg.norm(m1 @ v1 - lam * v1)
    leakage = math.sqrt(max(
        float(np.linalg.norm(apply(h, full) - lam * full) ** 2
              - inner ** 2), 0.0))
    return residual, inner, leakage
