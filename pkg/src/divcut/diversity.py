"""Diversity oracles over node subsets, induced metrics, and axiom checks.

A pseudo-diversity assigns every finite node subset a nonnegative value,
vanishes on singletons, and satisfies the triangle rule
delta(A u B) <= delta(A u C) + delta(B u C) for nonempty C. This module
provides:

  - the standard constructions: diameter, k-diameter, (hypergraph) Steiner,
    l1, cut, subadditive-derived, and independent-set oracles;
  - the induced metric d(x, y) = delta({x, y});
  - check_axioms, a property harness that hunts for violations of the
    axioms, monotonicity, the diameter/Steiner sandwich, k-diameter
    minimality, and the chain/star triangle-inequality bounds.

All checks compare with relative tolerance 1e-9, scaled by the largest
operand (diversities are nonnegative, so that scaling is sound).
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

import numpy as np

from divcut.core import Hypergraph, full_mask, iter_subsets, mask_of, members_of

__all__ = [
    "Metric",
    "DiversityOracle",
    "AxiomReport",
    "RTOL",
    "induced_metric",
    "diameter_oracle",
    "k_diameter_oracle",
    "steiner_oracle",
    "hypergraph_steiner_oracle",
    "l1_oracle",
    "cut_oracle",
    "from_subadditive",
    "independent_set_oracle",
    "table_oracle",
    "tabulate",
    "check_axioms",
]

RTOL = 1e-9

SubsetLike = Union[int, Iterable[int]]


# ---- metric spaces ----

class Metric:
    """Finite (pseudo) metric: symmetric nonnegative matrix, zero diagonal.

    Zero distance between distinct points is allowed (pseudo-metric), and
    +inf marks disconnected pairs. The triangle inequality is verified on
    construction within relative tolerance unless validate=False.
    """

    def __init__(self, d, validate: bool = True):
        d = np.asarray(d, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("metric needs a square matrix")
        self.n = d.shape[0]
        self.d = d.copy()
        self.d.flags.writeable = False
        if validate:
            self._validate()

    def _validate(self):
        d = self.d
        finite = d[np.isfinite(d)]
        scale = float(finite.max()) if finite.size else 0.0
        tol = RTOL * max(scale, 1.0)
        if np.any(np.diag(d) != 0):
            raise ValueError("metric diagonal must be zero")
        if np.any(d < 0):
            raise ValueError("metric entries must be nonnegative")
        if not np.array_equal(d, d.T):
            raise ValueError("metric must be symmetric")
        # d[i,j] <= d[i,k] + d[k,j] for all k, allowing tolerance
        with np.errstate(invalid="ignore"):
            via = (d[:, None, :] + d[None, :, :]).min(axis=2)
        bad = d > via + tol
        if np.any(bad):
            i, j = map(int, np.argwhere(bad)[0])
            raise ValueError(f"triangle inequality fails at pair ({i},{j})")

    @property
    def has_disconnected(self) -> bool:
        return bool(np.any(np.isinf(self.d)))

    def distance(self, u: int, v: int) -> float:
        return float(self.d[u, v])


# ---- the oracle type ----

def _as_mask(n: int, subset: SubsetLike) -> int:
    mask = subset if isinstance(subset, int) else mask_of(subset)
    if mask & ~full_mask(n):
        raise ValueError("subset has members outside the ground set")
    return mask


class DiversityOracle:
    """Uniform query interface delta(A) over node subsets.

    Values are cached per subset bitmask; oracles are immutable after
    construction and safe for concurrent queries (cached values depend only
    on the key, so racing writers store the same number).

    Attributes:
      n: ground-set size.
      tag: descriptor, e.g. "diameter" or "hypergraph-steiner".
      mode: "exact" or "approximate".
      factor: optional approximation-factor bound for approximate mode.
    """

    def __init__(self, n: int, func: Callable[[int], float], tag: str,
                 mode: str = "exact", factor: Optional[float] = None):
        if mode not in ("exact", "approximate"):
            raise ValueError("mode must be exact or approximate")
        self.n = n
        self.tag = tag
        self.mode = mode
        self.factor = factor
        self._func = func
        self._cache: Dict[int, float] = {}

    def value(self, subset: SubsetLike) -> float:
        """delta(A); zero on empty sets and singletons by definition."""
        mask = _as_mask(self.n, subset)
        if mask.bit_count() <= 1:
            return 0.0
        hit = self._cache.get(mask)
        if hit is None:
            hit = float(self._func(mask))
            self._cache[mask] = hit
        return hit

    __call__ = value


# ---- induced metric ----

def induced_metric(div: DiversityOracle) -> Metric:
    """Pairwise metric d(x, y) = delta({x, y}).

    Raises:
      ValueError: the pairwise values break the triangle inequality beyond
        tolerance, which signals a broken oracle.
    """
    return Metric(_pairwise(div))


def _pairwise(div: DiversityOracle) -> np.ndarray:
    n = div.n
    d = np.zeros((n, n))
    for u in range(n):
        for v in range(u + 1, n):
            d[u, v] = d[v, u] = div.value((1 << u) | (1 << v))
    return d


# ---- oracle constructions ----

def diameter_oracle(m: Metric) -> DiversityOracle:
    """delta(A) = max pairwise distance within A."""

    def ev(mask: int) -> float:
        idx = np.fromiter(members_of(mask), dtype=int)
        return float(m.d[np.ix_(idx, idx)].max())

    return DiversityOracle(m.n, ev, "diameter")


def k_diameter_oracle(div: DiversityOracle, k: int, cap: int = 16) -> DiversityOracle:
    """delta_kdiam(A) = max of delta over subsets of A with at most k members.

    Equals delta(A) whenever |A| <= k. Queries are enumerated exactly, so
    |A| is capped (default 16).
    """
    if k < 2:
        raise ValueError("k-diameter needs k >= 2")

    def ev(mask: int) -> float:
        mem = members_of(mask)
        if len(mem) > cap:
            raise ValueError(f"k-diameter query larger than cap {cap}")
        if len(mem) <= k:
            return div.value(mask)
        best = 0.0
        for size in range(2, k + 1):
            for combo in itertools.combinations(mem, size):
                best = max(best, div.value(mask_of(combo)))
        return best

    return DiversityOracle(div.n, ev, "k-diameter", div.mode, div.factor)


def steiner_oracle(g: Hypergraph, mode: str = "exact") -> DiversityOracle:
    """delta(A) = minimum weight of a connected subgraph of g spanning A.

    g must have rank at most 2 (a weighted graph). Exact mode enumerates;
    approximate mode runs the spanning-tree 2-approximation. Queries whose
    terminals are not mutually connected raise per query.
    """
    from divcut import steiner as st

    if g.rank > 2:
        raise ValueError("steiner oracle needs a rank-2 hypergraph")
    if mode == "exact":
        ev = lambda mask: st.steiner_tree_exact(g, mask).cost
        return DiversityOracle(g.n, ev, "steiner", "exact")
    ev = lambda mask: st.steiner_tree_2approx(g, mask).cost
    return DiversityOracle(g.n, ev, "steiner", "approximate", 2.0)


def hypergraph_steiner_oracle(h: Hypergraph, mode: str = "exact") -> DiversityOracle:
    """delta(A) = cheapest connected hyperedge set of h spanning A.

    Approximate mode ratio grows like O(log |A|); the factor field is left
    unset because the bound is query-dependent.
    """
    from divcut import steiner as st

    ev = lambda mask: st.hsp_solve(h, mask, mode).cost
    if mode == "exact":
        return DiversityOracle(h.n, ev, "hypergraph-steiner", "exact")
    return DiversityOracle(h.n, ev, "hypergraph-steiner", "approximate")


def l1_oracle(points) -> DiversityOracle:
    """delta_1(A) = sum over coordinates of the coordinate range of A."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError("points must be an n x m matrix")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")

    def ev(mask: int) -> float:
        rows = pts[np.fromiter(members_of(mask), dtype=int)]
        return float((rows.max(axis=0) - rows.min(axis=0)).sum())

    return DiversityOracle(pts.shape[0], ev, "l1")


def cut_oracle(n: int, U: SubsetLike) -> DiversityOracle:
    """delta_U(A) = 1 iff A meets U and is not contained in U, else 0."""
    u_mask = _as_mask(n, U)
    if u_mask == 0:
        raise ValueError("cut set U must be nonempty")

    def ev(mask: int) -> float:
        return 1.0 if (mask & u_mask) and (mask & ~u_mask) else 0.0

    return DiversityOracle(n, ev, "cut")


def from_subadditive(f: Callable[[FrozenSet[int]], float], n: int) -> DiversityOracle:
    """Pseudo-diversity delta(A) = f(A) for |A| >= 2, else 0.

    The caller asserts f is nonnegative, increasing, and subadditive; the
    construction does not verify it (check_axioms will surface violations).
    """
    return DiversityOracle(n, lambda mask: f(frozenset(members_of(mask))),
                           "subadditive-derived")


def independent_set_oracle(g: Hypergraph, cap: int = 24) -> DiversityOracle:
    """delta_IS(A) = maximum independent set size within A (|A| >= 2).

    g must be a simple graph. Evaluated by branch and bound on the lowest
    remaining vertex; ground sets above the cap are refused.
    """
    if g.rank > 2:
        raise ValueError("independent-set oracle needs a graph")
    if g.n > cap:
        raise ValueError(f"n={g.n} exceeds independent-set cap {cap}")
    nbr = [0] * g.n
    for mask, _ in g.edges:
        mem = members_of(mask)
        if len(mem) == 2:
            u, v = mem
            nbr[u] |= 1 << v
            nbr[v] |= 1 << u

    memo: Dict[int, int] = {0: 0}

    def mis(mask: int) -> int:
        hit = memo.get(mask)
        if hit is not None:
            return hit
        v = (mask & -mask).bit_length() - 1
        rest = mask & (mask - 1)
        best = max(mis(rest), 1 + mis(rest & ~nbr[v]))
        memo[mask] = best
        return best

    return DiversityOracle(g.n, lambda mask: float(mis(mask)), "subadditive-derived")


def table_oracle(n: int, table: Dict[int, float], mode: str = "exact") -> DiversityOracle:
    """Explicit lookup oracle; useful for planting axiom violations."""
    def ev(mask: int) -> float:
        if mask not in table:
            raise ValueError(f"table has no value for subset mask {mask}")
        return table[mask]

    return DiversityOracle(n, ev, "explicit-table", mode)


def tabulate(div: DiversityOracle, max_size: Optional[int] = None) -> Dict[int, float]:
    """All subset values of an oracle as a mask -> value dict."""
    cap = div.n if max_size is None else max_size
    return {mask: div.value(mask) for mask in iter_subsets(div.n, cap)}


# ---- axiom checking ----

@dataclass
class AxiomReport:
    """Violations found by check_axioms; empty list means all checks passed."""

    checked_size_cap: int
    violations: List[Tuple[str, Tuple[int, ...], Tuple[float, ...]]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _tol(*values: float) -> float:
    return RTOL * max(list(values) + [0.0])


def check_axioms(div: DiversityOracle, max_subset_size: int = 5,
                 companions: Optional[Dict[str, DiversityOracle]] = None,
                 seed: int = 0, random_triples: int = 200) -> AxiomReport:
    """Hunt for counterexamples to the (pseudo) diversity properties.

    Checks, over all subsets A with |A| <= max_subset_size:
      - nonnegativity and zero on |A| <= 1;
      - monotonicity under single-element extension;
      - the chain bound delta(A) <= sum d(v_i, v_i+1) over sorted members
        and the star bound delta(A) <= sum_v d(v, a) for each anchor a;
      - k-diameter minimality for k in {2, 3}: delta_kdiam <= delta, with
        equality when |A| <= k, and the k = 2 case equal to the induced
        diameter;
      - the sandwich delta_diam <= delta <= delta_Steiner when companions
        supplies "diameter" / "steiner" oracles sharing the metric.

    The triangle axiom delta(AuB) <= delta(AuC) + delta(BuC) is checked on
    all triples when n <= 5, otherwise on `random_triples` seeded draws.

    Returns:
      AxiomReport listing each violation with witness masks and values.
    """
    n = div.n
    report = AxiomReport(max_subset_size)
    family = list(iter_subsets(n, max_subset_size))

    def flag(name, masks, values):
        report.violations.append((name, tuple(masks), tuple(float(x) for x in values)))

    # pairwise values double as the induced metric for the bound checks
    d = _pairwise(div)

    for mask in family:
        val = div.value(mask)
        if val < -_tol(abs(val)):
            flag("nonnegative", (mask,), (val,))
        if mask.bit_count() <= 1 and val != 0.0:
            flag("zero-on-small", (mask,), (val,))

    for mask in family:
        base = div.value(mask)
        for v in range(n):
            if mask & (1 << v):
                continue
            ext = div.value(mask | (1 << v))
            if base > ext + _tol(base, ext):
                flag("monotone", (mask, mask | (1 << v)), (base, ext))

    for mask in family:
        mem = members_of(mask)
        if len(mem) < 2:
            continue
        val = div.value(mask)
        chain = sum(d[a, b] for a, b in zip(mem, mem[1:]))
        if val > chain + _tol(val, chain):
            flag("chain-bound", (mask,), (val, chain))
        for anchor in mem:
            star = sum(d[v, anchor] for v in mem)
            if val > star + _tol(val, star):
                flag("star-bound", (mask, 1 << anchor), (val, star))

    # triangle axiom
    rng = np.random.default_rng(seed)
    if n <= 5:
        triples = itertools.product(range(1 << n), range(1 << n), range(1, 1 << n))
    else:
        draws = rng.integers(0, 1 << n, size=(random_triples, 3))
        triples = ((int(a), int(b), int(c)) for a, b, c in draws if c != 0)
    for a, b, c in triples:
        ab = div.value(a | b)
        ac = div.value(a | c)
        bc = div.value(b | c)
        if ab > ac + bc + _tol(ab, ac + bc):
            flag("triangle", (a, b, c), (ab, ac, bc))

    # k-diameter minimality and the k = 2 diameter identity
    for k in (2, 3):
        kdiam = k_diameter_oracle(div, k)
        for mask in family:
            kd = kdiam.value(mask)
            val = div.value(mask)
            if kd > val + _tol(kd, val):
                flag(f"{k}-diameter-minimal", (mask,), (kd, val))
            if mask.bit_count() <= k and abs(kd - val) > _tol(kd, val):
                flag(f"{k}-diameter-small-equality", (mask,), (kd, val))
            if k == 2:
                mem = members_of(mask)
                diam = max((d[a, b] for a, b in itertools.combinations(mem, 2)), default=0.0)
                if abs(kd - diam) > _tol(kd, diam):
                    flag("2-diameter-is-diameter", (mask,), (kd, diam))

    if companions:
        lo = companions.get("diameter")
        hi = companions.get("steiner")
        for mask in family:
            val = div.value(mask)
            if lo is not None:
                low = lo.value(mask)
                if low > val + _tol(low, val):
                    flag("sandwich-lower", (mask,), (low, val))
            if hi is not None:
                high = hi.value(mask)
                if val > high + _tol(val, high):
                    flag("sandwich-upper", (mask,), (val, high))

    return report
