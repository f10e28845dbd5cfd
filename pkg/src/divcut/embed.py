"""Embeddings into the l1 diversity and the l1-to-cut-diversity decomposition.

The routes provided here:

  - frt_embed: random hierarchically well-separated tree whose metric
    dominates the input pointwise, with O(log n) expected expansion;
  - tree_to_l1: exact (distortion-1) coordinates for a tree diversity;
  - steiner_to_l1: frt_embed + tree_to_l1, best of several trials;
  - frechet_embed / diam_to_l1: scaled Frechet coordinates that are
    non-expansive pairwise and never exceed the diameter diversity;
  - naive_embed: the distance-to-anchor embedding with distortion <= n;
  - l1_to_cuts: threshold cuts reconstructing the l1 diversity exactly.

Every randomized construction takes an explicit numpy Generator; equal
generator states give equal outputs.
"""

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from divcut.core import full_mask, iter_subsets, mask_of, members_of
from divcut.diversity import DiversityOracle, Metric, diameter_oracle, induced_metric, l1_oracle

__all__ = [
    "WeightedTree",
    "Embedding",
    "CutDecomposition",
    "DistortionReport",
    "frt_embed",
    "tree_to_l1",
    "tree_diversity_oracle",
    "steiner_to_l1",
    "frechet_embed",
    "diam_to_l1",
    "kdiam_route",
    "naive_embed",
    "identity_embed",
    "l1_to_cuts",
    "measure_distortion",
]


# ---- domain types ----

@dataclass(frozen=True)
class WeightedTree:
    """Rooted tree with weighted edges and a point-to-node map.

    Node 0 is the root; parent[v] < v for every other node, so the arrays
    are valid by ordering alone. weight[v] is the cost of the edge from v
    up to parent[v] (weight[0] is unused and must be 0).
    """

    parent: Tuple[int, ...]
    weight: Tuple[float, ...]
    point_node: Tuple[int, ...]

    def __post_init__(self):
        size = len(self.parent)
        if size == 0 or self.parent[0] != -1 or len(self.weight) != size:
            raise ValueError("malformed tree arrays")
        if self.weight[0] != 0.0:
            raise ValueError("the root carries no edge weight")
        for v in range(1, size):
            if not 0 <= self.parent[v] < v:
                raise ValueError("parents must precede children")
            if not (math.isfinite(self.weight[v]) and self.weight[v] >= 0):
                raise ValueError(f"bad edge weight at node {v}")
        for node in self.point_node:
            if not 0 <= node < size:
                raise ValueError("point maps outside the tree")

    @property
    def size(self) -> int:
        return len(self.parent)

    @property
    def n(self) -> int:
        return len(self.point_node)

    def distance(self, x: int, y: int) -> float:
        """Tree metric between two original points."""
        a, b = self.point_node[x], self.point_node[y]
        total = 0.0
        while a != b:  # the deeper node has the larger id
            if a > b:
                total += self.weight[a]
                a = self.parent[a]
            else:
                total += self.weight[b]
                b = self.parent[b]
        return total


@dataclass(frozen=True, eq=False)
class Embedding:
    """Points in R^m compared under the l1 diversity."""

    coords: np.ndarray
    tag: str

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim != 2 or coords.shape[1] < 1:
            raise ValueError("coords must be an n x m matrix with m >= 1")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coords must be finite")
        coords = coords.copy()
        coords.flags.writeable = False
        object.__setattr__(self, "coords", coords)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def m(self) -> int:
        return self.coords.shape[1]

    def l1_diversity(self, subset: Union[int, Iterable[int]]) -> float:
        """delta_1 of the embedded subset (sum of coordinate ranges)."""
        return l1_oracle(self.coords).value(subset)


@dataclass(frozen=True)
class CutDecomposition:
    """delta_1 of an embedding as a positive combination of cut diversities.

    cuts holds (side bitmask, alpha) pairs; for every subset A the weighted
    count of cuts straddled by A reproduces delta_1 of the embedded points.
    """

    n: int
    cuts: Tuple[Tuple[int, float], ...]

    def __post_init__(self):
        full = full_mask(self.n)
        for side, alpha in self.cuts:
            if not 0 < side < full:
                raise ValueError("cut sides must be proper nonempty subsets")
            if not (math.isfinite(alpha) and alpha > 0):
                raise ValueError("alphas must be positive")

    def value(self, subset: Union[int, Iterable[int]]) -> float:
        """Sum of alphas over cuts straddled by the subset."""
        mask = subset if isinstance(subset, int) else mask_of(subset)
        return sum(alpha for side, alpha in self.cuts
                   if (mask & side) and (mask & ~side & full_mask(self.n)))


@dataclass(frozen=True)
class DistortionReport:
    """Worst observed ratios between a diversity and its embedded image.

    c1 bounds the shrinkage (max delta_X / delta_1-image), c2 the expansion
    (max of the reverse), and c = c1 * c2 is the distortion over the checked
    family. Witnesses are the subset masks attaining each maximum.
    """

    c1: float
    c2: float
    c: float
    witness_c1: int
    witness_c2: int
    policy: str


# ---- FRT dominating trees ----

def frt_embed(m: Metric, rng: np.random.Generator) -> WeightedTree:
    """Random dominating tree of a metric by hierarchical decomposition.

    A random permutation and a random scale beta = 2^U, U uniform in [0,1),
    drive a top-down partition: a cluster at level l is carved into children
    by balls of radius beta * 2^(l-1) around the points in permutation
    order. Levels where a cluster stays in one piece are skipped rather
    than chained through, and each child hangs below its cluster at half
    the cluster's actual diameter, so any two points split here are at tree
    distance exactly that diameter: domination holds on every draw with no
    slack, and the ball radii still shrink geometrically, which keeps the
    expected expansion at O(log n). Zero-distance points are merged up
    front and share a leaf.
    """
    reps, group_of = _merge_zero_groups(m)
    k = len(reps)
    if k == 1:
        return WeightedTree((-1,), (0.0,), tuple(0 for _ in range(m.n)))
    sub = m.d[np.ix_(reps, reps)]
    if not np.all(np.isfinite(sub)):
        raise ValueError("dominating trees need a connected (finite) metric")
    dmax = float(sub.max())
    beta = float(2.0 ** rng.random())
    order = [int(v) for v in rng.permutation(k)]
    level = 0
    while beta * 2.0 ** level < dmax:
        level += 1
    while beta * 2.0 ** (level - 1) >= dmax:
        level -= 1

    parent: List[int] = [-1]
    weight: List[float] = [0.0]
    leaf_of = {}
    queue = deque([(tuple(range(k)), level, 0)])
    while queue:
        members, lvl, node = queue.popleft()
        if len(members) == 1:
            leaf_of[members[0]] = node
            continue
        while True:
            radius = beta * 2.0 ** (lvl - 1)
            groups = []
            left = list(members)
            for center in order:
                if not left:
                    break
                claimed = [x for x in left if sub[center, x] < radius]
                if not claimed:
                    continue
                groups.append(claimed)
                left = [x for x in left if sub[center, x] >= radius]
            if len(groups) > 1:
                break
            lvl -= 1
        rows = sub[np.ix_(members, members)]
        half_diam = 0.5 * float(rows.max())
        for claimed in groups:
            child = len(parent)
            parent.append(node)
            weight.append(half_diam)
            queue.append((tuple(claimed), lvl - 1, child))
    point_node = tuple(leaf_of[group_of[x]] for x in range(m.n))
    return WeightedTree(tuple(parent), tuple(weight), point_node)


def _merge_zero_groups(m: Metric) -> Tuple[List[int], List[int]]:
    """Representatives of the zero-distance equivalence classes, plus the
    class index of every point."""
    reps: List[int] = []
    group_of = [-1] * m.n
    for x in range(m.n):
        for gi, r in enumerate(reps):
            if m.d[r, x] == 0.0:
                group_of[x] = gi
                break
        else:
            group_of[x] = len(reps)
            reps.append(x)
    return reps, group_of


# ---- tree routes ----

def tree_to_l1(t: WeightedTree) -> Embedding:
    """Exact l1 coordinates of a tree diversity: one coordinate per edge,
    set to the edge weight on points below that edge. The l1 diversity of
    any embedded subset equals the weight of the subtree spanning it."""
    size = t.size
    cols = max(size - 1, 1)
    coords = np.zeros((t.n, cols))
    for x, node in enumerate(t.point_node):
        v = node
        while v != 0:
            coords[x, v - 1] = t.weight[v]
            v = t.parent[v]
    return Embedding(coords, "frt-tree")


def tree_diversity_oracle(t: WeightedTree) -> DiversityOracle:
    """delta_T(A) = weight of the minimal subtree spanning A's nodes,
    computed as the union of root paths minus their shared prefix."""
    size = t.size
    path = [0] * size  # bitmask over nodes whose up-edge lies on the root path
    for v in range(1, size):
        path[v] = path[t.parent[v]] | (1 << v)

    def ev(mask: int) -> float:
        union = 0
        shared = -1
        for x in members_of(mask):
            p = path[t.point_node[x]]
            union |= p
            shared &= p
        return sum(t.weight[v] for v in members_of(union & ~shared))

    return DiversityOracle(t.n, ev, "tree")


def steiner_to_l1(m: Metric, rng: np.random.Generator, trials: int = 16) -> Embedding:
    """Dominating-tree coordinates for the Steiner diversity of a metric.

    Runs frt_embed + tree_to_l1 `trials` times on independently derived
    streams and keeps the draw with the smallest worst-case expansion
    against a spanning-tree reference, measured on all subsets of size at
    most 4 plus 256 sampled ones. Domination holds on every draw, so only
    the upper side varies.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    family = [mask for mask in iter_subsets(m.n, min(m.n, 4), min_size=2)]
    pool = full_mask(m.n)
    for _ in range(256):
        mask = int(rng.integers(1, pool + 1))
        if mask.bit_count() >= 2:
            family.append(mask)
    seeds = [int(s) for s in rng.integers(0, 2**63 - 1, size=trials)]
    best: Optional[Tuple[float, int, Embedding]] = None
    for idx, seed in enumerate(seeds):
        tree = frt_embed(m, np.random.default_rng(seed))
        emb = tree_to_l1(tree)
        ev = l1_oracle(emb.coords)
        worst = 1.0
        for mask in family:
            ref = _mst_weight(m.d, members_of(mask))
            if ref <= 0.0:
                continue
            worst = max(worst, ev.value(mask) / ref)
        key = (worst, idx)
        if best is None or key < (best[0], best[1]):
            best = (worst, idx, emb)
    return best[2]


def _mst_weight(d: np.ndarray, members: Sequence[int]) -> float:
    """Spanning-tree weight of a point set under a metric (Prim)."""
    if len(members) < 2:
        return 0.0
    rest = list(members[1:])
    dist = {v: float(d[members[0], v]) for v in rest}
    total = 0.0
    while rest:
        v = min(rest, key=lambda u: (dist[u], u))
        total += dist[v]
        rest.remove(v)
        for u in rest:
            dist[u] = min(dist[u], float(d[v, u]))
    return total


# ---- scaled Frechet routes ----

def frechet_embed(m: Metric, rng: np.random.Generator,
                  reps_per_scale: Optional[int] = None) -> Embedding:
    """Distance-to-random-set coordinates, scaled to be non-expansive.

    For scales t = 1..floor(log2 n), each of reps_per_scale repetitions
    samples a set A by keeping each point with probability 2^-t and emits
    the coordinate d(x, A) / M, where M counts all kept coordinates. Empty
    samples are redrawn up to 32 times and then dropped. By construction
    ||f(x) - f(y)||_1 <= d(x, y) for every pair and the l1 diversity of any
    embedded subset is at most its diameter.
    """
    if m.n < 2:
        raise ValueError("need at least two points")
    if not np.all(np.isfinite(m.d)):
        raise ValueError("need a connected (finite) metric")
    n = m.n
    scales = max(int(math.floor(math.log2(n))), 1)
    if reps_per_scale is None:
        reps_per_scale = int(math.ceil(4 * math.log2(n)))
    if reps_per_scale < 1:
        raise ValueError("need at least one repetition per scale")
    columns = []
    for t in range(1, scales + 1):
        p = 2.0 ** -t
        for _ in range(reps_per_scale):
            for _ in range(32):
                keep = rng.random(n) < p
                if keep.any():
                    columns.append(m.d[:, keep].min(axis=1))
                    break
    if not columns:
        return Embedding(np.zeros((n, 1)), "frechet")
    raw = np.column_stack(columns)
    return Embedding(raw / raw.shape[1], "frechet")


def diam_to_l1(m: Metric, rng: np.random.Generator) -> Embedding:
    """Embedding route for the diameter diversity (the Frechet coordinates
    deliver both of its guarantees directly)."""
    return frechet_embed(m, rng)


def kdiam_route(div: DiversityOracle, k: int,
                check_size_cap: int = 4) -> Tuple[DiversityOracle, DistortionReport]:
    """Route a k-diameter diversity through its induced diameter diversity.

    Returns the diameter oracle of the induced metric together with a
    checked certificate that delta_diam <= delta <= k * delta_diam held on
    every subset up to the size cap, i.e. the reduction costs at most a
    factor k before the diameter embedding takes over.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    diam = diameter_oracle(induced_metric(div))
    c1 = c2 = 0.0
    w1 = w2 = 0
    for mask in iter_subsets(div.n, min(div.n, check_size_cap), min_size=2):
        val = div.value(mask)
        low = diam.value(mask)
        if val > 0 and low == 0:
            c1, w1 = math.inf, mask
            continue
        if low > 0 and val / low > c1:
            c1, w1 = val / low, mask
        if val > 0 and low / val > c2:
            c2, w2 = low / val, mask
    report = DistortionReport(c1, c2, c1 * c2, w1, w2,
                              f"exhaustive<={check_size_cap}")
    return diam, report


# ---- naive and identity routes ----

def naive_embed(m: Metric) -> Embedding:
    """f(x) = (d(x_1, x), ..., d(x_n, x)); distortion at most n for every
    diversity inducing the metric."""
    if not np.all(np.isfinite(m.d)):
        raise ValueError("need a connected (finite) metric")
    return Embedding(m.d.T.copy(), "naive")


def identity_embed(points) -> Embedding:
    """Wrap existing l1 coordinates as an embedding (distortion 1)."""
    return Embedding(np.asarray(points, dtype=float), "identity")


# ---- decomposition and measurement ----

def l1_to_cuts(e: Embedding) -> CutDecomposition:
    """Threshold cuts of each coordinate, weighted by the value gaps.

    Per coordinate with distinct sorted values v_1 < ... < v_k, the cut
    {points with coordinate <= v_j} receives alpha = v_{j+1} - v_j; summing
    alphas over straddled cuts telescopes back to the coordinate range, so
    the decomposition reproduces delta_1 exactly (at most (n-1) * m cuts).
    """
    cuts: List[Tuple[int, float]] = []
    for i in range(e.m):
        col = e.coords[:, i]
        values = np.unique(col)
        for j in range(len(values) - 1):
            side = mask_of(int(p) for p in np.flatnonzero(col <= values[j]))
            alpha = float(values[j + 1] - values[j])
            if alpha > 0.0:
                cuts.append((side, alpha))
    return CutDecomposition(e.n, tuple(cuts))


def measure_distortion(div: DiversityOracle, e: Embedding,
                       size_cap: Optional[int] = None,
                       samples: Optional[int] = None,
                       rng: Optional[np.random.Generator] = None) -> DistortionReport:
    """Worst-case ratio scan between an oracle and its embedded image.

    With samples=None the family is every subset of size 2..size_cap
    (size_cap=None means all sizes); otherwise `samples` random subsets are
    drawn from rng. A subset embedded to zero while the oracle is positive
    reports c1 = +inf with the witness.
    """
    if div.n != e.n:
        raise ValueError("oracle and embedding sizes differ")
    ev = l1_oracle(e.coords)
    if samples is None:
        cap = div.n if size_cap is None else size_cap
        family = iter_subsets(div.n, cap, min_size=2)
        policy = f"exhaustive<={cap}"
    else:
        rng = rng or np.random.default_rng(0)
        pool = full_mask(div.n)
        family = (mask for mask in
                  (int(x) for x in rng.integers(1, pool + 1, size=samples))
                  if mask.bit_count() >= 2)
        policy = f"sampled:{samples}"
    c1 = c2 = 0.0
    w1 = w2 = 0
    for mask in family:
        dx = div.value(mask)
        dy = ev.value(mask)
        if dx > 0 and dy == 0:
            c1, w1 = math.inf, mask
            continue
        if dy > 0 and dx == 0:
            c2, w2 = math.inf, mask
            continue
        if dx == 0 and dy == 0:
            continue
        if dx / dy > c1:
            c1, w1 = dx / dy, mask
        if dy / dx > c2:
            c2, w2 = dy / dx, mask
    return DistortionReport(c1, c2, c1 * c2, w1, w2, policy)
