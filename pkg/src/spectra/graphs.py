"""Rooted graph families and metric primitives.

All graphs here are finite truncations of infinite objects.  Builders record
the *truncation frontier*: the vertices that would receive further neighbors
if the construction were continued.  Downstream code uses the frontier to
keep boundary-contaminated data out of limit-operator statistics.

Graphs are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import json
import math
import random
from collections import deque
from dataclasses import dataclass, field


class GraphSizeError(ValueError):
    """Requested construction exceeds desk-scale limits."""


class GenerationError(RuntimeError):
    """Randomized construction failed to meet its target within budget."""


_MAX_VERTICES = 5_000_000


@dataclass(frozen=True)
class RootedGraph:
    """Finite adjacency structure with a distinguished root.

    adjacency[v] is the sorted tuple of neighbors of v.  The graph is
    simple, undirected and connected from the root.  ``frontier`` lists the
    vertices at which the underlying infinite object was cut off (empty if
    unknown; metric queries then fall back to the eccentricity shell).
    """

    adjacency: tuple
    root: int
    frontier: tuple = ()
    max_degree: int = field(default=0)

    def __post_init__(self):
        n = len(self.adjacency)
        if n == 0:
            raise ValueError("graph must have at least one vertex")
        if not (0 <= self.root < n):
            raise ValueError("root out of range")
        seen_deg = 0
        for v, nbrs in enumerate(self.adjacency):
            prev = -1
            for u in nbrs:
                if u == v:
                    raise ValueError(f"self-loop at {v}")
                if u <= prev:
                    raise ValueError(f"unsorted or duplicate neighbor list at {v}")
                if not (0 <= u < n):
                    raise ValueError(f"neighbor {u} out of range at {v}")
                if v not in self.adjacency[u]:
                    raise ValueError(f"asymmetric edge ({v},{u})")
                prev = u
            seen_deg = max(seen_deg, len(nbrs))
        if self.max_degree == 0:
            object.__setattr__(self, "max_degree", seen_deg)
        elif self.max_degree != seen_deg:
            raise ValueError("cached max_degree disagrees with adjacency")
        if len(self.distances_from(self.root)) != n:
            raise ValueError("graph not connected from root")

    @property
    def vertex_count(self) -> int:
        return len(self.adjacency)

    @property
    def edge_count(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def edges(self):
        for v, nbrs in enumerate(self.adjacency):
            for u in nbrs:
                if v < u:
                    yield (v, u)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def distances_from(self, source, cutoff=None) -> dict:
        """BFS distance map; ``source`` may be a vertex or an iterable."""
        try:
            sources = [int(source)]
        except TypeError:
            sources = [int(s) for s in source]
        dist = {s: 0 for s in sources}
        q = deque(sources)
        while q:
            v = q.popleft()
            dv = dist[v]
            if cutoff is not None and dv >= cutoff:
                continue
            for u in self.adjacency[v]:
                if u not in dist:
                    dist[u] = dv + 1
                    q.append(u)
        return dist

    def eccentricity(self, v=None) -> int:
        return max(self.distances_from(self.root if v is None else v).values())

    def frontier_vertices(self) -> tuple:
        """Truncation frontier; eccentricity shell if the builder set none."""
        if self.frontier:
            return self.frontier
        dist = self.distances_from(self.root)
        ecc = max(dist.values())
        return tuple(sorted(v for v, d in dist.items() if d == ecc))

    def boundary_distances(self) -> dict:
        return self.distances_from(self.frontier_vertices())


@dataclass(frozen=True)
class BallView:
    """Coherently-indexed metric ball.

    Members are ordered by (distance from center, vertex id); restricting to
    a smaller radius is a prefix of this ordering, which is what makes the
    ball matrices of nested radii nested corners.
    """

    center: int
    radius: int
    members: tuple
    index_of: dict

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True)
class GrowthProfile:
    sphere_sizes: tuple
    ball_sizes: tuple
    ratio_sup: float


def from_edges(vertex_count: int, edges, root: int = 0, frontier=()) -> RootedGraph:
    adj = [set() for _ in range(vertex_count)]
    for u, v in edges:
        if u == v:
            raise ValueError(f"self-loop at {u}")
        adj[u].add(v)
        adj[v].add(u)
    return RootedGraph(
        adjacency=tuple(tuple(sorted(a)) for a in adj),
        root=root,
        frontier=tuple(sorted(set(frontier))),
    )


def ball(g: RootedGraph, v: int, r: int) -> BallView:
    """Ball of radius r around v in coherent BFS order."""
    if not (0 <= v < g.vertex_count):
        raise ValueError("center out of range")
    if r < 0:
        raise ValueError("radius must be nonnegative")
    dist = g.distances_from(v, cutoff=r)
    members = tuple(sorted(dist, key=lambda u: (dist[u], u)))
    return BallView(center=v, radius=r, members=members,
                    index_of={u: i for i, u in enumerate(members)})


def growth_profile(g: RootedGraph, base: int, R: int) -> GrowthProfile:
    dist = g.distances_from(base)
    if R > max(dist.values()):
        raise ValueError("R exceeds eccentricity of base")
    spheres = [0] * (R + 1)
    for d in dist.values():
        if d <= R:
            spheres[d] += 1
    balls, total = [], 0
    for s in spheres:
        total += s
        balls.append(total)
    ratio = max(balls[r] / spheres[r] for r in range(1, R + 1)) if R >= 1 else 1.0
    return GrowthProfile(tuple(spheres), tuple(balls), ratio)


def girth(g: RootedGraph):
    """Length of the shortest cycle, math.inf for forests.

    BFS from every vertex; a non-tree edge seen at depths (a, b) witnesses a
    cycle of length a+b+1 through the BFS root.  Minimizing over roots gives
    the exact girth.
    """
    best = math.inf
    for s in range(g.vertex_count):
        dist = {s: 0}
        parent = {s: -1}
        q = deque([s])
        while q:
            v = q.popleft()
            if 2 * dist[v] >= best - 1:
                continue
            for u in g.adjacency[v]:
                if u not in dist:
                    dist[u] = dist[v] + 1
                    parent[u] = v
                    q.append(u)
                elif parent[v] != u and parent[u] != v:
                    best = min(best, dist[v] + dist[u] + 1)
    return best


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def build_regular_tree(degree: int, depth: int) -> RootedGraph:
    """Rooted d-regular tree truncated at ``depth``.

    The root has ``degree`` children, every other internal vertex has
    degree-1 children; sphere sizes follow S(r) = d(d-1)^(r-1).
    """
    if degree < 2:
        raise ValueError("degree must be >= 2")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    count = 1
    width = degree
    for _ in range(depth):
        count += width
        if count > _MAX_VERTICES:
            raise GraphSizeError("tree too large")
        width *= degree - 1
    edges = []
    next_id = 1
    level = [0]
    for r in range(depth):
        new_level = []
        for v in level:
            children = degree if r == 0 else degree - 1
            for _ in range(children):
                edges.append((v, next_id))
                new_level.append(next_id)
                next_id += 1
        level = new_level
    return from_edges(next_id, edges, root=0, frontier=level if depth > 0 else [0])


def build_grid(n: int, half_side: int) -> RootedGraph:
    """Box [-L, L]^n in the n-dimensional lattice, rooted at the center."""
    if n < 1 or half_side < 0:
        raise ValueError("bad grid parameters")
    side = 2 * half_side + 1
    if side ** n > _MAX_VERTICES:
        raise GraphSizeError("grid too large")
    coords = [()]
    for _ in range(n):
        coords = [c + (x,) for c in coords for x in range(-half_side, half_side + 1)]
    index = {c: i for i, c in enumerate(coords)}
    edges = []
    frontier = []
    for c, i in index.items():
        if any(abs(x) == half_side for x in c):
            frontier.append(i)
        for j in range(n):
            up = c[:j] + (c[j] + 1,) + c[j + 1:]
            if up in index:
                edges.append((i, index[up]))
    return from_edges(len(coords), edges, root=index[(0,) * n], frontier=frontier)


def build_comb(arm_length: int, spine_length: int) -> RootedGraph:
    """Spine {-S..S} x {0} with two-sided arms {k} x {-A..A}; root at (0,0)."""
    if arm_length < 0 or spine_length < 0:
        raise ValueError("lengths must be >= 0")
    pts = {}
    for k in range(-spine_length, spine_length + 1):
        for l in range(-arm_length, arm_length + 1):
            pts[(k, l)] = len(pts)
    edges = []
    frontier = []
    for (k, l), i in pts.items():
        if abs(k) == spine_length or abs(l) == arm_length:
            frontier.append(i)
        if (k + 1, l) in pts and l == 0:
            edges.append((i, pts[(k + 1, l)]))
        if (k, l + 1) in pts:
            edges.append((i, pts[(k, l + 1)]))
    return from_edges(len(pts), edges, root=pts[(0, 0)], frontier=frontier)


def build_star(k: int, ray_length: int) -> RootedGraph:
    """k paths of ``ray_length`` vertices glued at a common root."""
    if k < 2 or ray_length < 1:
        raise ValueError("need k >= 2 and ray_length >= 1")
    edges = []
    frontier = []
    next_id = 1
    for _ in range(k):
        prev = 0
        for step in range(ray_length):
            edges.append((prev, next_id))
            prev = next_id
            next_id += 1
        frontier.append(prev)
    return from_edges(next_id, edges, root=0, frontier=frontier)


def build_znxn(n: int, levels: int) -> RootedGraph:
    """Lattice of growing boxes joined by lattice-direction connector paths.

    Each lattice point x with max-norm at most ``levels`` carries a box of
    side 2*|x|_inf + 1; adjacent boxes are joined between the center points
    of their facing surfaces by a fresh path of max(|x|_inf, |x+e_j|_inf)
    edges.  Root is the single vertex of the origin box.
    """
    if n < 2 or levels < 1:
        raise ValueError("need n >= 2 and levels >= 1")

    lattice = [()]
    for _ in range(n):
        lattice = [c + (x,) for c in lattice for x in range(-levels, levels + 1)]

    total = sum((2 * max(abs(x) for x in c) + 1) ** n if c != (0,) * n else 1
                for c in lattice)
    if total > _MAX_VERTICES:
        raise GraphSizeError("znxn too large")

    vid = 0
    box_index = {}   # (lattice point, local coord) -> vertex id
    edges = []

    def norm_inf(c):
        return max(abs(x) for x in c)

    for c in lattice:
        L = norm_inf(c)
        local = [()]
        for _ in range(n):
            local = [p + (x,) for p in local for x in range(-L, L + 1)]
        for p in local:
            box_index[(c, p)] = vid
            vid += 1
        for p in local:
            i = box_index[(c, p)]
            for j in range(n):
                up = p[:j] + (p[j] + 1,) + p[j + 1:]
                if (c, up) in box_index:
                    edges.append((i, box_index[(c, up)]))

    frontier = []
    for c in lattice:
        L = norm_inf(c)
        for j in range(n):
            cu = c[:j] + (c[j] + 1,) + c[j + 1:]
            exit_face = (0,) * j + (L,) + (0,) * (n - j - 1)
            a = box_index[(c, exit_face)]
            if norm_inf(cu) > levels:
                frontier.append(a)   # connector toward an absent box
                continue
            Lu = norm_inf(cu)
            entry_face = (0,) * j + (-Lu,) + (0,) * (n - j - 1)
            b = box_index[(cu, entry_face)]
            length = max(L, Lu)
            prev = a
            for _ in range(length - 1):
                edges.append((prev, vid))
                prev = vid
                vid += 1
            edges.append((prev, b))
    # faces pointing in -e_j toward absent boxes
    for c in lattice:
        L = norm_inf(c)
        for j in range(n):
            cd = c[:j] + (c[j] - 1,) + c[j + 1:]
            if norm_inf(cd) > levels:
                face = (0,) * j + (-L,) + (0,) * (n - j - 1)
                frontier.append(box_index[(c, face)])

    return from_edges(vid, edges, root=box_index[((0,) * n, (0,) * n)],
                      frontier=frontier)


def build_sparse_tree_with_cycles(k_values, branch_levels, cycle_levels,
                                  depth: int) -> RootedGraph:
    """Spherically homogeneous sparse tree with a cycle on selected spheres.

    Branching is k_n at the levels in ``branch_levels`` and 1 elsewhere.  At
    each level in ``cycle_levels`` the sphere is joined into a single cycle
    in the natural (planar) enumeration; a 2-vertex sphere gets one edge and
    a 1-vertex sphere none (simple graphs only).
    """
    branch_levels = list(branch_levels)
    cycle_levels = list(cycle_levels)
    k_values = list(k_values)
    if len(k_values) != len(branch_levels):
        raise ValueError("k_values must parallel branch_levels")
    if any(k < 1 for k in k_values):
        raise ValueError("branching numbers must be >= 1")
    if sorted(branch_levels) != branch_levels or \
            len(set(branch_levels)) != len(branch_levels):
        raise ValueError("branch levels must be strictly increasing")
    bounds = [0] + branch_levels
    for c in cycle_levels:
        i = next((i for i, L in enumerate(branch_levels) if L > c), None)
        if i is None or c < bounds[i]:
            raise ValueError(f"cycle level {c} violates L_n > C_n >= L_(n-1)")
    if depth < max(branch_levels + cycle_levels):
        raise ValueError("depth must cover every structured level")

    # sphere size jumps by k_n at level L_n, so parents at L_n - 1 branch
    kappa = {L - 1: k for L, k in zip(branch_levels, k_values)}
    edges = []
    next_id = 1
    # sphere vertices in planar order; order is preserved level to level
    sphere = [0]
    spheres = {0: [0]}
    for lvl in range(depth):
        k = kappa.get(lvl, 1)
        new = []
        for v in sphere:
            for _ in range(k):
                edges.append((v, next_id))
                new.append(next_id)
                next_id += 1
        sphere = new
        spheres[lvl + 1] = sphere
    for c in cycle_levels:
        ring = spheres[c]
        if len(ring) >= 3:
            for a, b in zip(ring, ring[1:]):
                edges.append((a, b))
            edges.append((ring[-1], ring[0]))
        elif len(ring) == 2:
            edges.append((ring[0], ring[1]))
    return from_edges(next_id, edges, root=0, frontier=spheres[depth])


# ---------------------------------------------------------------------------
# random regular blocks and the polynomial-growth counterexample
# ---------------------------------------------------------------------------

def _pairing_regular_graph(n: int, d: int, rng: random.Random):
    """Pairing-model d-regular simple graph on n vertices.

    Greedy matching of degree stubs with re-shuffling of the clashing ones;
    a round that cannot place any remaining stub restarts from scratch.
    """
    for _ in range(500):
        edges = set()
        stubs = [v for v in range(n) for _ in range(d)]
        while stubs:
            rng.shuffle(stubs)
            leftover = []
            it = iter(stubs)
            for a, b in zip(it, it):
                e = (min(a, b), max(a, b))
                if a == b or e in edges:
                    leftover.extend((a, b))
                else:
                    edges.add(e)
            if len(leftover) == len(stubs):
                break   # stuck; restart
            stubs = leftover
        if not stubs:
            return edges
    raise GenerationError("pairing model failed to produce a simple graph")


def _short_cycle_counts(A, floor: int):
    """Counts of cycles of length 3..floor-1 from adjacency powers."""
    import numpy as np

    counts = []
    if floor > 3:
        A2 = A @ A
        A3 = A2 @ A
        counts.append(int(round(np.trace(A3))) // 6)
        if floor > 4:
            cod = np.triu(A2, 1)
            counts.append(int(round((cod * (cod - 1) / 2).sum())) // 2)
            if floor > 5:
                A5 = A3 @ A2
                deg = A.sum(axis=1)
                t5 = np.trace(A5) - 5 * np.trace(A3) \
                    - 5 * ((deg - 2) * np.diag(A3)).sum()
                counts.append(int(round(t5)) // 10)
                if floor > 6:
                    raise ValueError("girth floors above 6 are out of scope")
    return tuple(counts)


def _short_cycle_edge_pool(A, floor: int):
    """Edges lying on some cycle shorter than ``floor`` (numpy adjacency)."""
    import numpy as np

    out = set()
    if floor > 3:
        A2 = A @ A
        for u, v in zip(*np.nonzero(np.triu((A2 * A) > 0, 1))):
            out.add((int(u), int(v)))
        if floor > 4 and not out:
            for i, j in zip(*np.nonzero(np.triu(A2 >= 2, 1))):
                for w in np.nonzero(A[i] * A[j])[0]:
                    out.add(tuple(sorted((int(i), int(w)))))
                    out.add(tuple(sorted((int(j), int(w)))))
        if floor > 5 and not out:
            return None   # 5-cycles: fall back to uniform proposals
    return sorted(out)


def random_regular_with_girth(n: int, d: int, girth_floor: int,
                              rng: random.Random, swap_budget: int = 30000,
                              restarts: int = 6):
    """d-regular simple graph on n vertices with girth >= girth_floor.

    Starts from a pairing-model sample and removes short cycles with
    double-edge swaps targeted at edges of short cycles, descending
    lexicographically on the vector of (3-, 4-, 5-)cycle counts; sideways
    moves unstick plateaus.  Raises GenerationError, reporting the best
    girth reached, when every restart exhausts its swap budget.
    """
    import numpy as np

    if (n * d) % 2 != 0:
        raise ValueError("n*d must be even")
    if d >= n:
        raise ValueError("need d < n")
    if girth_floor < 3:
        girth_floor = 3

    best_girth = 3
    for _ in range(restarts):
        edge_set = _pairing_regular_graph(n, d, rng)
        A = np.zeros((n, n))
        for a, b in edge_set:
            A[a, b] = A[b, a] = 1.0
        score = _short_cycle_counts(A, girth_floor)
        targets = _short_cycle_edge_pool(A, girth_floor)
        for _ in range(swap_budget):
            if not any(score):
                edges = [tuple(sorted(e)) for e in edge_set]
                if girth(from_edges(n, edges)) >= girth_floor:
                    return edges
                break   # defensive: count formulas disagreed
            if targets is not None and not targets:
                targets = _short_cycle_edge_pool(A, girth_floor)
            e1 = rng.choice(targets) if targets else rng.choice(sorted(edge_set))
            if e1 not in edge_set:
                targets = _short_cycle_edge_pool(A, girth_floor)
                continue
            e2 = rng.choice(sorted(edge_set))
            u, v = e1
            x, y = e2 if rng.random() < 0.5 else e2[::-1]
            if len({u, v, x, y}) < 4 or A[u, x] or A[v, y]:
                continue
            for a, b in (e1, e2):
                A[a, b] = A[b, a] = 0.0
            A[u, x] = A[x, u] = A[v, y] = A[y, v] = 1.0
            new_score = _short_cycle_counts(A, girth_floor)
            if new_score < score or (new_score == score and rng.random() < 0.3):
                edge_set.discard(e1)
                edge_set.discard(e2)
                edge_set.add((min(u, x), max(u, x)))
                edge_set.add((min(v, y), max(v, y)))
                if new_score < score:
                    targets = _short_cycle_edge_pool(A, girth_floor)
                score = new_score
            else:
                A[u, x] = A[x, u] = A[v, y] = A[y, v] = 0.0
                for a, b in (e1, e2):
                    A[a, b] = A[b, a] = 1.0
        g = from_edges(n, [tuple(sorted(e)) for e in edge_set])
        best_girth = max(best_girth, girth(g))
    raise GenerationError(
        f"girth target {girth_floor} not reached; best girth {best_girth}")


def build_counterexample(d: int, block_sizes, girth_floors, seed: int) -> RootedGraph:
    """Half-line with d-regular large-girth blocks spliced into chosen edges.

    The edge (k_i, k_i+1) of the half-line, with k_i the partial sums of the
    block sizes, is replaced by a d-regular block of size n_i and girth at
    least g_i, attached at a diameter-realizing pair of its vertices.  The
    resulting growth around the line origin is linear (N(k) <= 2k).
    """
    block_sizes = list(block_sizes)
    girth_floors = list(girth_floors)
    if d < 3:
        raise ValueError("need d >= 3")
    if len(block_sizes) != len(girth_floors):
        raise ValueError("block_sizes must parallel girth_floors")
    for n_i in block_sizes:
        if (n_i * d) % 2 != 0:
            raise ValueError(f"block size {n_i}: n*d must be even")
    rng = random.Random(seed)

    k = [0]
    for n_i in block_sizes:
        k.append(k[-1] + n_i)
    tail = block_sizes[-1]
    line_len = k[-1] + tail          # line positions 1 .. line_len
    pos_id = {p: p - 1 for p in range(1, line_len + 1)}

    edges = []
    cut = {(k_i, k_i + 1) for k_i in k[1:]}
    for p in range(1, line_len):
        if (p, p + 1) not in cut:
            edges.append((pos_id[p], pos_id[p + 1]))

    next_id = line_len
    marked = []
    for n_i, g_i, k_i in zip(block_sizes, girth_floors, k[1:]):
        block_edges = random_regular_with_girth(n_i, d, g_i, rng)
        offset = next_id
        edges.extend((offset + a, offset + b) for a, b in block_edges)
        next_id += n_i
        # diameter-realizing marked pair, lexicographically smallest
        badj = [[] for _ in range(n_i)]
        for a, b in block_edges:
            badj[a].append(b)
            badj[b].append(a)
        best = (-1, 0, 0)
        for s in range(n_i):
            dist = {s: 0}
            q = deque([s])
            while q:
                v = q.popleft()
                for u in badj[v]:
                    if u not in dist:
                        dist[u] = dist[v] + 1
                        q.append(u)
            far = max(dist.values())
            t = min(v for v, dd in dist.items() if dd == far)
            cand = (far, -s, -t)
            if cand > best:
                best = cand
                pair = (s, t)
        u1, u2 = pair
        edges.append((pos_id[k_i], offset + u1))
        edges.append((offset + u2, pos_id[k_i + 1]))
        marked.append((offset + u1, offset + u2))

    g = from_edges(next_id, edges, root=pos_id[1],
                   frontier=[pos_id[line_len]])
    object.__setattr__(g, "block_marks", tuple(marked))
    object.__setattr__(g, "block_ranges",
                       tuple((line_len + sum(block_sizes[:i]),
                              line_len + sum(block_sizes[:i + 1]))
                             for i in range(len(block_sizes))))
    return g


# ---------------------------------------------------------------------------
# canonical JSON serialization
# ---------------------------------------------------------------------------

def to_json(g: RootedGraph, labels=None) -> str:
    doc = {
        "vertex_count": g.vertex_count,
        "root": g.root,
        "edges": sorted([u, v] for u, v in g.edges()),
    }
    if g.frontier:
        doc["frontier"] = sorted(g.frontier)
    if labels is not None:
        doc["labels"] = list(labels)
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def from_json(text: str) -> RootedGraph:
    doc = json.loads(text)
    return from_edges(doc["vertex_count"], doc["edges"], root=doc["root"],
                      frontier=doc.get("frontier", ()))


def save_graph(g: RootedGraph, path, labels=None):
    with open(path, "w") as fh:
        fh.write(to_json(g, labels))


def load_graph(path) -> RootedGraph:
    with open(path) as fh:
        return from_json(fh.read())
