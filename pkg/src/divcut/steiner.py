"""Steiner machinery: graph Steiner trees, node-weighted Steiner (Klein-Ravi
spider greedy), the hypergraph-to-node-weighted reduction, and the hypergraph
Steiner solver used both as a diversity evaluator and LP separation oracle.

Conventions:
  - terminal sets are bitmasks (or iterables) over the node indices;
  - a hyperedge is paid once when used, which the bipartite expansion models
    by charging a hyperedge's weight on entry to its auxiliary node;
  - every returned solution is canonicalized (sorted indices) so equal-cost
    answers compare stably in tests.
"""

import heapq
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from divcut.core import Hypergraph, full_mask, iter_subsets, mask_of, members_of
from divcut.diversity import Metric

__all__ = [
    "NodeWeightedGraph",
    "HspReduction",
    "SteinerSolution",
    "steiner_tree_2approx",
    "steiner_tree_exact",
    "nstp_exact",
    "nstp_klein_ravi",
    "hsp_reduce",
    "hsp_solve",
    "metric_closure",
    "metric_complete_graph",
    "is_connected_subhypergraph",
]


# ---- domain types ----

@dataclass(frozen=True)
class NodeWeightedGraph:
    """Undirected simple graph with nonnegative node weights."""

    n: int
    weights: Tuple[float, ...]
    edges: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        if len(self.weights) != self.n:
            raise ValueError("need one weight per node")
        for w in self.weights:
            if not (math.isfinite(w) and w >= 0):
                raise ValueError(f"bad node weight {w!r}")
        seen = set()
        for u, v in self.edges:
            if u == v or not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"bad edge ({u},{v})")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge ({u},{v})")
            seen.add(key)


@dataclass(frozen=True)
class HspReduction:
    """Bipartite expansion of a hypergraph for node-weighted Steiner.

    Original nodes keep weight 0; hyperedge U becomes an auxiliary node of
    weight w(U) adjacent to exactly the members of U.
    """

    graph: NodeWeightedGraph
    edge_node_of: Tuple[int, ...]
    original_n: int


@dataclass(frozen=True)
class SteinerSolution:
    """A Steiner solution: selected items, cost, and a feasibility certificate.

    `selected` holds hyperedge indices for hypergraph solutions, node indices
    for node-weighted solutions, and (u, v) pairs for graph trees; it is
    always sorted. `feasible` records a connectivity re-check of the
    returned structure.
    """

    selected: Tuple
    cost: float
    feasible: bool


# ---- shared helpers ----

def _as_mask(n: int, subset: Union[int, Iterable[int]]) -> int:
    mask = subset if isinstance(subset, int) else mask_of(subset)
    if mask & ~full_mask(n):
        raise ValueError("terminals outside the node range")
    return mask


def _adjacency(g: NodeWeightedGraph) -> List[List[int]]:
    adj: List[List[int]] = [[] for _ in range(g.n)]
    for u, v in g.edges:
        adj[u].append(v)
        adj[v].append(u)
    for row in adj:
        row.sort()
    return adj


def _nw_dijkstra(g: NodeWeightedGraph, adj: List[List[int]], source: int,
                 free_mask: int = 0) -> Tuple[List[float], List[int]]:
    # Cost accrues on node entry; the source's own weight is never counted
    # and nodes in free_mask cost nothing to enter.
    dist = [math.inf] * g.n
    parent = [-1] * g.n
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        du, u = heapq.heappop(heap)
        if du > dist[u]:
            continue
        for v in adj[u]:
            step = 0.0 if (free_mask >> v) & 1 else g.weights[v]
            nd = du + step
            if nd < dist[v]:
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))
    return dist, parent


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, v: int) -> int:
        p = self.parent
        while p[v] != v:
            p[v] = p[p[v]]
            v = p[v]
        return v

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def _pair_edges(g: Hypergraph) -> List[Tuple[float, int, int, int]]:
    # (weight, u, v, index) for the rank-2 edges; singleton edges never help
    # a tree and are skipped.
    out = []
    for i, (mask, w) in enumerate(g.edges):
        mem = members_of(mask)
        if len(mem) == 2:
            out.append((w, mem[0], mem[1], i))
        elif len(mem) > 2:
            raise ValueError("expected a rank-2 hypergraph")
    return out


def is_connected_subhypergraph(h: Hypergraph, edge_indices: Sequence[int],
                               terminals: Union[int, Iterable[int]]) -> bool:
    """True iff the chosen hyperedges connect and cover all terminals."""
    term = _as_mask(h.n, terminals)
    if term.bit_count() <= 1:
        return True
    covered = 0
    uf = _UnionFind(h.n)
    for i in edge_indices:
        mem = members_of(h.edges[i][0])
        covered |= h.edges[i][0]
        for v in mem[1:]:
            uf.union(mem[0], v)
    if term & ~covered:
        return False
    roots = {uf.find(v) for v in members_of(term)}
    return len(roots) == 1


# ---- graph Steiner trees ----

def steiner_tree_exact(g: Hypergraph, terminals: Union[int, Iterable[int]],
                       node_cap: int = 14, terminal_cap: int = 8) -> SteinerSolution:
    """Optimal Steiner tree of a weighted graph, by node-subset enumeration.

    Every subset of non-terminal nodes is tried; the minimum spanning tree
    of the induced subgraph gives the best tree on that node set, and the
    overall minimum is the exact optimum.

    Args:
      g: rank-2 hypergraph (parallel edges allowed).
      terminals: node bitmask or iterable.
      node_cap / terminal_cap: enumeration guards (2^(n-|T|) subsets).

    Raises:
      ValueError: caps exceeded or terminals not mutually connected.
    """
    term = _as_mask(g.n, terminals)
    t = term.bit_count()
    if t <= 1:
        return SteinerSolution((), 0.0, True)
    if g.n > node_cap or t > terminal_cap:
        raise ValueError(f"exact Steiner caps exceeded (n<={node_cap}, |T|<={terminal_cap})")
    edges = sorted(_pair_edges(g))
    rest = [v for v in range(g.n) if not (term >> v) & 1]
    best_cost = math.inf
    best_edges: Optional[Tuple[Tuple[int, int], ...]] = None
    for extra in iter_subsets(len(rest), len(rest)):
        nodeset = term | mask_of(rest[i] for i in members_of(extra))
        uf = _UnionFind(g.n)
        picked = []
        cost = 0.0
        need = nodeset.bit_count() - 1
        for w, u, v, _ in edges:
            if not ((nodeset >> u) & 1 and (nodeset >> v) & 1):
                continue
            if uf.union(u, v):
                picked.append((u, v))
                cost += w
                need -= 1
                if need == 0:
                    break
        if need == 0 and cost < best_cost:
            best_cost = cost
            best_edges = tuple(sorted(picked))
    if best_edges is None:
        raise ValueError("terminals are not mutually connected")
    return SteinerSolution(best_edges, best_cost, True)


def steiner_tree_2approx(g: Union[Hypergraph, Metric],
                         terminals: Union[int, Iterable[int]]) -> SteinerSolution:
    """Spanning-tree 2-approximation of the Steiner tree.

    Classic recipe: metric closure restricted to the terminals, minimum
    spanning tree of the closure, shortcut each closure edge back to a
    shortest graph path, then clean up with another spanning tree and leaf
    pruning. On a Metric input the closure is the metric itself, so the
    result is simply the terminal MST under d.
    """
    if isinstance(g, Metric):
        term = _as_mask(g.n, terminals)
        mem = members_of(term)
        if len(mem) <= 1:
            return SteinerSolution((), 0.0, True)
        closure = [(g.d[u, v], u, v) for i, u in enumerate(mem) for v in mem[i + 1:]]
        if any(not math.isfinite(w) for w, _, _ in closure):
            raise ValueError("terminals are not mutually connected")
        picked, cost = _kruskal(mem, closure)
        return SteinerSolution(tuple(sorted(picked)), cost, True)

    term = _as_mask(g.n, terminals)
    mem = members_of(term)
    if len(mem) <= 1:
        return SteinerSolution((), 0.0, True)
    dist, parent = _graph_dijkstra_all(g, mem)
    closure = []
    for i, u in enumerate(mem):
        for v in mem[i + 1:]:
            if not math.isfinite(dist[u][v]):
                raise ValueError("terminals are not mutually connected")
            closure.append((dist[u][v], u, v))
    closure_mst, _ = _kruskal(mem, closure)
    # 3. replace closure edges by the shortest paths they stand for
    path_edges = set()
    for u, v in closure_mst:
        x = v
        while x != u:
            p = parent[u][x]
            path_edges.add((min(p, x), max(p, x), dist[u][x] - dist[u][p]))
            x = p
    # 4-5. spanning tree of the union, then prune non-terminal leaves
    nodes = sorted({u for u, _, _ in path_edges} | {v for _, v, _ in path_edges} | set(mem))
    tree, _ = _kruskal(nodes, [(w, u, v) for u, v, w in sorted(path_edges)])
    tree = _prune_leaves(tree, term)
    weight_of = {}
    for u, v, w in path_edges:
        weight_of[(u, v)] = min(w, weight_of.get((u, v), math.inf))
    cost = sum(weight_of[e] for e in tree)
    return SteinerSolution(tuple(sorted(tree)), cost, True)


def _graph_dijkstra_all(g: Hypergraph, sources: Sequence[int]):
    adj: Dict[int, List[Tuple[int, float]]] = {v: [] for v in range(g.n)}
    for w, u, v, _ in _pair_edges(g):
        adj[u].append((v, w))
        adj[v].append((u, w))
    for v in adj:
        adj[v].sort()
    dist: Dict[int, List[float]] = {}
    parent: Dict[int, List[int]] = {}
    for s in sources:
        ds = [math.inf] * g.n
        ps = [-1] * g.n
        ds[s] = 0.0
        heap = [(0.0, s)]
        while heap:
            du, u = heapq.heappop(heap)
            if du > ds[u]:
                continue
            for v, w in adj[u]:
                if du + w < ds[v]:
                    ds[v] = du + w
                    ps[v] = u
                    heapq.heappush(heap, (du + w, v))
        dist[s] = ds
        parent[s] = ps
    return dist, parent


def _kruskal(nodes: Sequence[int], weighted_edges: Sequence[Tuple[float, int, int]]):
    index = {v: i for i, v in enumerate(nodes)}
    uf = _UnionFind(len(nodes))
    picked = []
    cost = 0.0
    for w, u, v in sorted(weighted_edges):
        if uf.union(index[u], index[v]):
            picked.append((min(u, v), max(u, v)))
            cost += w
    return picked, cost


def _prune_leaves(tree: List[Tuple[int, int]], term: int) -> List[Tuple[int, int]]:
    tree = list(tree)
    while True:
        degree: Dict[int, int] = {}
        for u, v in tree:
            degree[u] = degree.get(u, 0) + 1
            degree[v] = degree.get(v, 0) + 1
        drop = {v for v, d in degree.items() if d == 1 and not (term >> v) & 1}
        if not drop:
            return tree
        tree = [(u, v) for u, v in tree if u not in drop and v not in drop]


# ---- node-weighted Steiner ----

def nstp_exact(g: NodeWeightedGraph, terminals: Union[int, Iterable[int]],
               node_cap: int = 18) -> SteinerSolution:
    """Minimum-weight connected node superset of the terminals, by enumeration."""
    term = _as_mask(g.n, terminals)
    if term == 0:
        return SteinerSolution((), 0.0, True)
    if term.bit_count() == 1:
        v = members_of(term)[0]
        return SteinerSolution((v,), g.weights[v], True)
    if g.n > node_cap:
        raise ValueError(f"n={g.n} exceeds exact node-weighted cap {node_cap}")
    nbr = [0] * g.n
    for u, v in g.edges:
        nbr[u] |= 1 << v
        nbr[v] |= 1 << u
    rest = [v for v in range(g.n) if not (term >> v) & 1]
    best = math.inf
    best_set: Optional[Tuple[int, ...]] = None
    for extra in iter_subsets(len(rest), len(rest)):
        nodeset = term | mask_of(rest[i] for i in members_of(extra))
        if not _mask_connected(nbr, nodeset):
            continue
        cost = sum(g.weights[v] for v in members_of(nodeset))
        if cost < best:
            best = cost
            best_set = members_of(nodeset)
    if best_set is None:
        raise ValueError("terminals are not mutually connected")
    return SteinerSolution(best_set, best, True)


def _mask_connected(nbr: List[int], nodeset: int) -> bool:
    if nodeset == 0:
        return True
    comp = nodeset & -nodeset
    while True:
        grown = comp
        for v in members_of(comp):
            grown |= nbr[v] & nodeset
        if grown == comp:
            return comp == nodeset
        comp = grown


def nstp_klein_ravi(g: NodeWeightedGraph,
                    terminals: Union[int, Iterable[int]]) -> SteinerSolution:
    """Spider-decomposition greedy for node-weighted Steiner trees.

    Each round scores every center v and leg count k >= 2 by
    (w(v) + sum of k cheapest distances to distinct terminal components) / k,
    where distances are node-weighted shortest paths with already selected
    nodes free; ties break by (ratio, v, k). The best spider's paths are
    absorbed and components merge, so at most |terminals| - 1 rounds run.
    The approximation ratio is O(log |terminals|).
    """
    term = _as_mask(g.n, terminals)
    if term == 0:
        return SteinerSolution((), 0.0, True)
    if term.bit_count() == 1:
        v = members_of(term)[0]
        return SteinerSolution((v,), g.weights[v], True)
    adj = _adjacency(g)
    nbr = [0] * g.n
    for u, v in g.edges:
        nbr[u] |= 1 << v
        nbr[v] |= 1 << u
    selected = term
    while True:
        comps = _components_of_mask(nbr, selected)
        comps = [c for c in comps if c & term]
        if len(comps) <= 1:
            break
        best = None  # (ratio, v, k, entry nodes, parents)
        for v in range(g.n):
            dist, parent = _nw_dijkstra(g, adj, v, free_mask=selected)
            reach = []
            for ci, comp in enumerate(comps):
                pairs = [(dist[u], u) for u in members_of(comp) if math.isfinite(dist[u])]
                if pairs:
                    reach.append((min(pairs), ci))
            if len(reach) < 2:
                continue
            reach.sort()
            center_w = 0.0 if (selected >> v) & 1 else g.weights[v]
            acc = center_w + reach[0][0][0]
            for k in range(2, len(reach) + 1):
                acc += reach[k - 1][0][0]
                ratio = acc / k
                cand = (ratio, v, k, tuple(r[0][1] for r in reach[:k]), parent)
                if best is None or cand[:3] < best[:3]:
                    best = cand
        if best is None:
            raise ValueError("terminals are not mutually connected")
        _, v, _, entries, parent = best
        selected |= 1 << v
        for u in entries:
            while u != v:
                selected |= 1 << u
                u = parent[u]
    keep = next(c for c in _components_of_mask(nbr, selected) if c & term)
    chosen = members_of(keep)
    cost = sum(g.weights[v] for v in chosen)
    feasible = term & ~keep == 0
    return SteinerSolution(chosen, cost, feasible)


def _components_of_mask(nbr: List[int], nodeset: int) -> List[int]:
    comps = []
    left = nodeset
    while left:
        comp = left & -left
        while True:
            grown = comp
            for v in members_of(comp):
                grown |= nbr[v] & nodeset
            if grown == comp:
                break
            comp = grown
        comps.append(comp)
        left &= ~comp
    return comps


# ---- hypergraph Steiner ----

def hsp_reduce(h: Hypergraph, terminals: Union[int, Iterable[int]]) -> HspReduction:
    """Reduce hypergraph Steiner to node-weighted Steiner.

    Every hyperedge U gains an auxiliary node of weight w(U) adjacent to
    exactly the members of U; original nodes get weight 0. The node-weighted
    optimum on the expansion equals the hypergraph Steiner optimum, and the
    chosen auxiliary nodes name the chosen hyperedges.
    """
    term = _as_mask(h.n, terminals)
    if term.bit_count() < 2:
        raise ValueError("the reduction expects at least two terminals")
    weights = [0.0] * h.n + [w for _, w in h.edges]
    edges = []
    for i, (mask, _) in enumerate(h.edges):
        aux = h.n + i
        for v in members_of(mask):
            edges.append((v, aux))
    graph = NodeWeightedGraph(h.n + len(h.edges), tuple(weights), tuple(edges))
    return HspReduction(graph, tuple(range(h.n, h.n + len(h.edges))), h.n)


def hsp_solve(h: Hypergraph, terminals: Union[int, Iterable[int]],
              mode: str = "exact", edge_cap: int = 20) -> SteinerSolution:
    """Cheapest connected hyperedge set spanning the terminals.

    Exact mode branches over hyperedges in ascending weight order with cost
    and reachability pruning (|E| capped). Approximate mode runs Klein-Ravi
    on the bipartite expansion and maps the chosen auxiliary nodes back to
    hyperedges; its cost is within O(log |terminals|) of optimal.

    Raises:
      ValueError: terminals not coverable, or exact cap exceeded.
    """
    term = _as_mask(h.n, terminals)
    if term.bit_count() <= 1:
        return SteinerSolution((), 0.0, True)
    if not is_connected_subhypergraph(h, range(len(h.edges)), term):
        raise ValueError("terminals are not coverable by the hypergraph")
    if mode == "approximate":
        red = hsp_reduce(h, term)
        sol = nstp_klein_ravi(red.graph, term)
        aux = set(sol.selected)
        picked = tuple(i for i, node in enumerate(red.edge_node_of) if node in aux)
        cost = sum(h.edges[i][1] for i in picked)
        return SteinerSolution(picked, cost, is_connected_subhypergraph(h, picked, term))
    if mode != "exact":
        raise ValueError("mode must be exact or approximate")
    if len(h.edges) > edge_cap:
        raise ValueError(f"|E|={len(h.edges)} exceeds exact cap {edge_cap}")

    order = sorted(range(len(h.edges)), key=lambda i: (h.edges[i][1], i))
    greedy: List[int] = []
    for i in order:
        greedy.append(i)
        if is_connected_subhypergraph(h, greedy, term):
            break
    best_cost = sum(h.edges[i][1] for i in greedy)
    best_sel = tuple(sorted(greedy))

    def connects(indices: List[int]) -> bool:
        return is_connected_subhypergraph(h, indices, term)

    def rec(pos: int, chosen: List[int], cost: float):
        nonlocal best_cost, best_sel
        if cost >= best_cost:
            return
        if connects(chosen):
            best_cost = cost
            best_sel = tuple(sorted(chosen))
            return
        if pos == len(order) or not connects(chosen + order[pos:]):
            return
        i = order[pos]
        chosen.append(i)
        rec(pos + 1, chosen, cost + h.edges[i][1])
        chosen.pop()
        rec(pos + 1, chosen, cost)

    rec(0, [], 0.0)
    return SteinerSolution(best_sel, best_cost, True)


def metric_closure(h: Hypergraph) -> Metric:
    """Shortest-path metric of a hypergraph: d(u, v) = cheapest hyperedge
    chain joining u and v, which is the hypergraph Steiner value on pairs.

    Disconnected pairs come back as +inf (see Metric.has_disconnected).
    """
    weights = [0.0] * h.n + [w for _, w in h.edges]
    edges = []
    for i, (mask, _) in enumerate(h.edges):
        for v in members_of(mask):
            edges.append((v, h.n + i))
    g = NodeWeightedGraph(h.n + len(h.edges), tuple(weights), tuple(edges))
    adj = _adjacency(g)
    d = np.zeros((h.n, h.n))
    for u in range(h.n):
        dist, _ = _nw_dijkstra(g, adj, u)
        d[u, :] = dist[: h.n]
    d = np.minimum(d, d.T)  # symmetric up to float noise; enforce exactly
    return Metric(d)


def metric_complete_graph(m: Metric) -> Hypergraph:
    """Complete rank-2 hypergraph whose pair weights are the metric distances."""
    edges = []
    for u in range(m.n):
        for v in range(u + 1, m.n):
            edges.append(((1 << u) | (1 << v), float(m.d[u, v])))
    return Hypergraph(m.n, tuple(edges))
