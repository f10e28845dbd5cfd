"""Hypergraph instance model and cut arithmetic for generalized sparsest cut.

Nodes are dense integer indices 0..n-1 and node subsets are int bitmasks,
which keeps cut enumeration cheap (Python ints are arbitrary precision, so
the same representation covers any n). A Hypergraph doubles as supply and
demand network; an Instance is a (supply, demand) pair over one node set.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "Hypergraph",
    "Instance",
    "Cut",
    "SparsityReport",
    "mask_of",
    "members_of",
    "full_mask",
    "iter_subsets",
    "is_cut_by",
    "cut_weight",
    "sparsity",
    "expansion",
    "uniform_demand",
    "brute_sparsest_cut",
    "generate",
    "GENERATOR_KINDS",
]


# ---- bitmask helpers ----

def mask_of(members: Iterable[int]) -> int:
    """Bitmask of a collection of node indices."""
    m = 0
    for v in members:
        m |= 1 << v
    return m


def members_of(mask: int) -> Tuple[int, ...]:
    """Sorted tuple of node indices set in a bitmask."""
    out = []
    v = 0
    while mask:
        if mask & 1:
            out.append(v)
        mask >>= 1
        v += 1
    return tuple(out)


def full_mask(n: int) -> int:
    return (1 << n) - 1


def iter_subsets(n: int, max_size: int, min_size: int = 0):
    """Yield subset bitmasks of {0..n-1} by size, then lexicographic members."""
    for k in range(min_size, min(max_size, n) + 1):
        for combo in itertools.combinations(range(n), k):
            yield mask_of(combo)


# ---- domain types ----

@dataclass(frozen=True)
class Hypergraph:
    """Weighted hypergraph: node count plus (member-bitmask, weight) edges.

    Edges keep their list order; parallel hyperedges are allowed and never
    merged, so every sum in this package runs over the edge list as given.
    """

    n: int
    edges: Tuple[Tuple[int, float], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("hypergraph needs at least one node")
        full = full_mask(self.n)
        for i, (mask, w) in enumerate(self.edges):
            if mask == 0:
                raise ValueError(f"edge {i} is empty")
            if mask & ~full:
                raise ValueError(f"edge {i} has members outside 0..{self.n - 1}")
            if not (math.isfinite(w) and w >= 0):
                raise ValueError(f"edge {i} has bad weight {w!r}")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[Iterable[int], float]]) -> "Hypergraph":
        """Build from (member-iterable, weight) pairs."""
        return cls(n, tuple((mask_of(mem), float(w)) for mem, w in edges))

    @property
    def rank(self) -> int:
        """Maximum hyperedge cardinality (0 if no edges)."""
        return max((mask.bit_count() for mask, _ in self.edges), default=0)

    def member_lists(self) -> List[Tuple[List[int], float]]:
        """Edges as (sorted member list, weight), for serialization."""
        return [(list(members_of(mask)), w) for mask, w in self.edges]

    def reweighted(self, weights: Sequence[float]) -> "Hypergraph":
        """Same edge structure with new weights (one per edge)."""
        if len(weights) != len(self.edges):
            raise ValueError("weight count does not match edge count")
        return Hypergraph(self.n, tuple((mask, float(w)) for (mask, _), w in zip(self.edges, weights)))


@dataclass(frozen=True)
class Instance:
    """A supply/demand hypergraph pair over the same node set."""

    supply: Hypergraph
    demand: Hypergraph

    def __post_init__(self):
        if self.supply.n != self.demand.n:
            raise ValueError("supply and demand node counts differ")
        if self.supply.n < 2:
            raise ValueError("instance needs at least two nodes")
        # Some cut must have a positive denominator, which takes a demand
        # edge that both carries weight and spans at least two nodes.
        if not any(w > 0 and mask.bit_count() >= 2 for mask, w in self.demand.edges):
            raise ValueError("demand has no positively weighted multi-node edge")

    @property
    def n(self) -> int:
        return self.supply.n


@dataclass(frozen=True)
class Cut:
    """A proper nonempty node subset, stored as the bitmask of side A."""

    n: int
    side: int

    def __post_init__(self):
        if not 0 < self.side < full_mask(self.n):
            raise ValueError("cut side must be a proper nonempty subset")

    @classmethod
    def from_members(cls, n: int, members: Iterable[int]) -> "Cut":
        return cls(n, mask_of(members))

    @property
    def members(self) -> Tuple[int, ...]:
        return members_of(self.side)

    def complement(self) -> "Cut":
        return Cut(self.n, full_mask(self.n) ^ self.side)


@dataclass(frozen=True)
class SparsityReport:
    """Sparsity of one cut: cut supply weight over cut demand weight."""

    cut: Cut
    numerator: float
    denominator: float
    phi: float


# ---- cut arithmetic ----

def is_cut_by(edge_mask: int, cut: Cut) -> bool:
    """True iff the edge intersects both sides of the cut."""
    other = full_mask(cut.n) ^ cut.side
    return bool(edge_mask & cut.side) and bool(edge_mask & other)


def cut_weight(h: Hypergraph, cut: Cut) -> float:
    """Total weight of hyperedges crossing the cut."""
    if h.n != cut.n:
        raise ValueError("cut and hypergraph node counts differ")
    side = cut.side
    other = full_mask(h.n) ^ side
    total = 0.0
    for mask, w in h.edges:
        if (mask & side) and (mask & other):
            total += w
    return total


def sparsity(inst: Instance, cut: Cut) -> SparsityReport:
    """Evaluate the sparsity phi of a cut; denominator 0 yields phi = +inf."""
    if cut.n != inst.n:
        raise ValueError("cut and instance node counts differ")
    num = cut_weight(inst.supply, cut)
    den = cut_weight(inst.demand, cut)
    phi = num / den if den > 0 else math.inf
    return SparsityReport(cut, num, den, phi)


def expansion(h: Hypergraph, cut: Cut) -> float:
    """Cut weight divided by the smaller side's node count."""
    small = min(cut.side.bit_count(), h.n - cut.side.bit_count())
    return cut_weight(h, cut) / small


def uniform_demand(n: int) -> Hypergraph:
    """Complete unit-weight pair graph; cut demand of A equals |A|*|A^C|."""
    if n < 2:
        raise ValueError("uniform demand needs n >= 2")
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            edges.append(((1 << u) | (1 << v), 1.0))
    return Hypergraph(n, tuple(edges))


def brute_sparsest_cut(inst: Instance, cap: int = 20) -> SparsityReport:
    """Exact sparsest cut by enumerating all 2^(n-1)-1 cut pairs.

    Node 0 is fixed inside A so each {A, A^C} pair is seen once. Cuts with
    denominator 0 are skipped; ties are broken by the lexicographically
    smallest sorted member tuple of the side containing node 0.

    Args:
      inst: the instance to minimize over.
      cap: refuse node counts above this (default 20 keeps enumeration
        sub-second); pass a larger value to override.

    Returns:
      SparsityReport of the minimizing cut.

    Raises:
      ValueError: n exceeds cap, or no cut has a positive denominator.
    """
    n = inst.n
    if n > cap:
        raise ValueError(f"n={n} exceeds brute-force cap {cap}")
    full = full_mask(n)
    best: Optional[SparsityReport] = None
    best_key = None
    for rest in range(1 << (n - 1)):
        side = (rest << 1) | 1
        if side == full:
            continue
        rep = sparsity(inst, Cut(n, side))
        if rep.denominator <= 0:
            continue
        key = (rep.phi, members_of(side))
        if best is None or key < best_key:
            best, best_key = rep, key
    if best is None:
        raise ValueError("no cut has a positive demand denominator")
    return best


# ---- generators ----

GENERATOR_KINDS = ("path", "grid", "expander", "random", "hyper-uniform", "graph-hyper")


def _components(n: int, edges: Sequence[Tuple[int, float]]) -> List[int]:
    """Connected-component masks of a hypergraph, sorted by smallest node."""
    comp = list(range(n))

    def find(v):
        while comp[v] != v:
            comp[v] = comp[comp[v]]
            v = comp[v]
        return v

    for mask, _ in edges:
        mem = members_of(mask)
        for v in mem[1:]:
            comp[find(mem[0])] = find(v)
    groups: Dict[int, int] = {}
    for v in range(n):
        groups[find(v)] = groups.get(find(v), 0) | (1 << v)
    return [groups[r] for r in sorted(groups, key=lambda r: members_of(groups[r])[0])]


def _connect_up(n: int, edges: List[Tuple[int, float]]) -> List[Tuple[int, float]]:
    # Chain components together with unit pair edges so every demand edge is
    # coverable by the supply (the relaxation needs a connected supply).
    comps = _components(n, edges)
    for a, b in zip(comps, comps[1:]):
        u = members_of(a)[0]
        v = members_of(b)[0]
        edges.append(((1 << u) | (1 << v), 1.0))
    return edges


def _random_hyperedges(rng: np.random.Generator, n: int, m: int, max_rank: int,
                       weight_range: Tuple[float, float]) -> List[Tuple[int, float]]:
    lo, hi = weight_range
    if not (0 < lo <= hi):
        raise ValueError("weight range must satisfy 0 < lo <= hi")
    if not 2 <= max_rank <= n:
        raise ValueError("max rank must be between 2 and n")
    edges = []
    for _ in range(m):
        k = int(rng.integers(2, max_rank + 1))
        mem = rng.choice(n, size=k, replace=False)
        w = float(lo + (hi - lo) * rng.random())
        edges.append((mask_of(int(v) for v in mem), w))
    return edges


def _path_supply(n: int) -> List[Tuple[int, float]]:
    return [((1 << i) | (1 << (i + 1)), 1.0) for i in range(n - 1)]


def _grid_supply(n: int) -> List[Tuple[int, float]]:
    rows = max(d for d in range(1, int(math.isqrt(n)) + 1) if n % d == 0)
    cols = n // rows
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append(((1 << v) | (1 << (v + 1)), 1.0))
            if r + 1 < rows:
                edges.append(((1 << v) | (1 << (v + cols)), 1.0))
    return edges


def _regular_supply(rng: np.random.Generator, n: int, d: int) -> List[Tuple[int, float]]:
    # Stub matching, retried until the graph is simple and connected.
    if d < 1 or d >= n or (n * d) % 2:
        raise ValueError("d-regular graph needs 1 <= d < n and n*d even")
    for _ in range(500):
        stubs = np.repeat(np.arange(n), d)
        rng.shuffle(stubs)
        seen = set()
        ok = True
        for i in range(0, len(stubs), 2):
            u, v = int(stubs[i]), int(stubs[i + 1])
            if u == v or (min(u, v), max(u, v)) in seen:
                ok = False
                break
            seen.add((min(u, v), max(u, v)))
        if ok:
            edges = [((1 << u) | (1 << v), 1.0) for u, v in sorted(seen)]
            if len(_components(n, edges)) == 1:
                return edges
    raise ValueError(f"no connected {d}-regular graph found for n={n}")


def generate(kind: str, seed: int = 0, n: int = 8, m: int = 10, rank: int = 3,
             weight_range: Tuple[float, float] = (1.0, 1.0), d: int = 3) -> Instance:
    """Deterministic instance generator.

    Kinds: path / grid / expander (fixed or d-regular supply, uniform
    demand), random (random supply and demand hypergraphs), hyper-uniform
    (random supply hypergraph, uniform demand), graph-hyper (random supply
    graph, random demand hypergraph). All kinds produce a connected supply,
    so the sparsest-cut relaxation is always feasible on generated
    instances; random kinds get chained up with unit pair edges if needed.

    Args:
      kind: one of GENERATOR_KINDS.
      seed: RNG seed; equal seeds give equal instances.
      n: node count (>= 2).
      m: hyperedge count for the random kinds.
      rank: maximum hyperedge cardinality for the random kinds.
      weight_range: (lo, hi) with 0 < lo <= hi for random weights.
      d: degree for the expander kind.

    Raises:
      ValueError: unknown kind or infeasible parameters.
    """
    if n < 2:
        raise ValueError("generator needs n >= 2")
    rng = np.random.default_rng(seed)
    if kind == "path":
        return Instance(Hypergraph(n, tuple(_path_supply(n))), uniform_demand(n))
    if kind == "grid":
        return Instance(Hypergraph(n, tuple(_grid_supply(n))), uniform_demand(n))
    if kind == "expander":
        return Instance(Hypergraph(n, tuple(_regular_supply(rng, n, d))), uniform_demand(n))
    if kind == "random":
        supply = _connect_up(n, _random_hyperedges(rng, n, m, rank, weight_range))
        demand = _random_hyperedges(rng, n, m, rank, weight_range)
        return Instance(Hypergraph(n, tuple(supply)), Hypergraph(n, tuple(demand)))
    if kind == "hyper-uniform":
        supply = _connect_up(n, _random_hyperedges(rng, n, m, rank, weight_range))
        return Instance(Hypergraph(n, tuple(supply)), uniform_demand(n))
    if kind == "graph-hyper":
        supply = _connect_up(n, _random_hyperedges(rng, n, m, 2, weight_range))
        demand = _random_hyperedges(rng, n, m, rank, weight_range)
        return Instance(Hypergraph(n, tuple(supply)), Hypergraph(n, tuple(demand)))
    raise ValueError(f"unknown generator kind {kind!r}")
