"""The sparsest-cut pipeline: LP relaxation over pseudo-diversities with
hypergraph-Steiner separation, l1-embedding of the optimal diversity, and
rounding the cut decomposition back to a sparse cut.

The relaxation (variables d_U per supply hyperedge, y_S per demand edge)

    min  sum_U w_G(U) d_U
    s.t. sum_S w_H(S) y_S >= 1
         sum_{U in t} d_U >= y_S   for every connected cover t of S
         d, y >= 0

is solved by cutting planes: separation is a minimum hypergraph-Steiner
computation per demand edge on the supply reweighted by the current d. The
optimal d defines a hypergraph-Steiner diversity whose induced metric is
the reweighted shortest-path closure; embedding that metric into l1 and
decomposing into threshold cuts yields candidate node cuts, the best of
which is the answer. The mediant inequality ties its sparsity to the
aggregate of the decomposition, which the distortion analysis ties back to
the LP lower bound.
"""

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from divcut.core import (
    Cut,
    Hypergraph,
    Instance,
    SparsityReport,
    brute_sparsest_cut,
    members_of,
    sparsity,
)
from divcut.diversity import DiversityOracle, hypergraph_steiner_oracle
from divcut.embed import (
    DistortionReport,
    Embedding,
    diam_to_l1,
    l1_to_cuts,
    measure_distortion,
    steiner_to_l1,
)
from divcut.lp import LpModel, LpSolution, Row, cutting_plane
from divcut.steiner import hsp_solve, metric_closure, steiner_tree_2approx

__all__ = [
    "RelaxationResult",
    "LpDiversity",
    "SolveReport",
    "RelaxationInfeasibleError",
    "SeparationLimitError",
    "ROUTES",
    "build_relaxation_seed",
    "separate",
    "solve_relaxation",
    "round_cut",
    "solve_general",
    "solve_supply_graph",
    "report",
]

ROUTES = ("hs-frt", "kdiam-frechet", "steiner-frt")
SEPARATION_MODES = ("exact", "approximate", "steiner-2approx")

_VIOLATION_TOL = 1e-7
_CLAMP = 1e-12
_EXACT_EDGE_CAP = 20


class RelaxationInfeasibleError(ValueError):
    """Some demand edge cannot be covered by the supply hypergraph."""


class SeparationLimitError(RuntimeError):
    """The cutting-plane loop hit its round budget before separating clean."""


# ---- domain types ----

@dataclass(frozen=True)
class RelaxationResult:
    """Optimal relaxation values: d_U per supply edge, y_S per demand edge."""

    d_U: Tuple[float, ...]
    y_S: Tuple[float, ...]
    objective: float
    separation_mode: str
    rounds: int


@dataclass(frozen=True, eq=False)
class LpDiversity:
    """The diversity the relaxation optimum defines: the hypergraph-Steiner
    diversity of the supply reweighted by d_U."""

    supply: Hypergraph
    oracle: DiversityOracle


@dataclass(frozen=True, eq=False)
class SolveReport:
    """End-to-end outcome for one instance.

    phi_mediant is the alpha-weighted aggregate ratio of the winning
    embedding's cut decomposition; phi_rounded never exceeds it. phi_brute,
    ratio, and distortion stay None unless requested.
    """

    cut: Cut
    phi_rounded: float
    lp_objective: float
    route: str
    phi_mediant: float
    rounds: int
    separation_mode: str
    trials: int
    seconds: float
    phi_brute: Optional[float] = None
    ratio: Optional[float] = None
    distortion: Optional[DistortionReport] = None


# ---- relaxation ----

def _multi_node_demands(inst: Instance) -> List[int]:
    return [j for j, (mask, _) in enumerate(inst.demand.edges)
            if mask.bit_count() >= 2]


def build_relaxation_seed(inst: Instance) -> LpModel:
    """Seed model: objective, normalization, and one bounding tree row per
    demand edge (found with approximate separation under unit weights).

    Demand edges over a single node get y_S = 0 outright (the empty cover
    already spans them at cost 0).

    Raises:
      RelaxationInfeasibleError: a demand edge is not coverable by supply.
    """
    m_g = len(inst.supply.edges)
    m_h = len(inst.demand.edges)
    names = tuple(f"d{i}" for i in range(m_g)) + tuple(f"y{j}" for j in range(m_h))
    objective = tuple(w for _, w in inst.supply.edges) + (0.0,) * m_h
    unit = inst.supply.reweighted([1.0] * m_g)
    rows: List[Row] = []
    norm = [0.0] * (m_g + m_h)
    for j, (_, w) in enumerate(inst.demand.edges):
        norm[m_g + j] = w
    rows.append((tuple(norm), ">=", 1.0))
    for j, (mask, _) in enumerate(inst.demand.edges):
        coeffs = [0.0] * (m_g + m_h)
        coeffs[m_g + j] = -1.0
        if mask.bit_count() < 2:
            rows.append((tuple(coeffs), ">=", 0.0))
            continue
        try:
            tree = hsp_solve(unit, mask, mode="approximate")
        except ValueError as exc:
            raise RelaxationInfeasibleError(
                f"demand edge {members_of(mask)} is not coverable by supply") from exc
        for i in tree.selected:
            coeffs[i] = 1.0
        rows.append((tuple(coeffs), ">=", 0.0))
    return LpModel(names, objective, tuple(rows))


def _clamped_d(inst: Instance, sol: LpSolution) -> List[float]:
    m_g = len(inst.supply.edges)
    return [0.0 if v < _CLAMP else float(v) for v in sol.values[:m_g]]


def separate(inst: Instance, sol: LpSolution, mode: str) -> List[Row]:
    """Violated tree rows for the current relaxation values.

    For each demand edge S, the cheapest connected cover of S under the
    reweighted supply is compared against y_S; covers cheaper than
    y_S - 1e-7 yield the row sum_{U in t} d_U >= y_S. Exact mode gives
    exact separation; "approximate" uses the spider greedy via the
    node-weighted reduction; "steiner-2approx" uses the spanning-tree
    2-approximation and needs a rank-2 supply.
    """
    if mode not in SEPARATION_MODES:
        raise ValueError(f"unknown separation mode {mode!r}")
    m_g = len(inst.supply.edges)
    d_vals = _clamped_d(inst, sol)
    reweighted = inst.supply.reweighted(d_vals)
    pair_index: Dict[Tuple[int, int], int] = {}
    if mode == "steiner-2approx":
        if inst.supply.rank > 2:
            raise ValueError("2-approximation separation needs a rank-2 supply")
        for i, (mask, _) in enumerate(inst.supply.edges):
            mem = members_of(mask)
            if len(mem) == 2:
                old = pair_index.get(mem)
                if old is None or (d_vals[i], i) < (d_vals[old], old):
                    pair_index[mem] = i
    rows: List[Row] = []
    for j in _multi_node_demands(inst):
        mask = inst.demand.edges[j][0]
        y_j = float(sol.values[m_g + j])
        if y_j <= _VIOLATION_TOL:
            continue
        if mode == "steiner-2approx":
            tree = steiner_tree_2approx(reweighted, mask)
            chosen = sorted(pair_index[edge] for edge in tree.selected)
        else:
            chosen = list(hsp_solve(reweighted, mask, mode=mode).selected)
        cost = sum(d_vals[i] for i in chosen)
        if cost < y_j - _VIOLATION_TOL:
            coeffs = [0.0] * len(sol.values)
            for i in chosen:
                coeffs[i] = 1.0
            coeffs[m_g + j] = -1.0
            rows.append((tuple(coeffs), ">=", 0.0))
    return rows


def _resolve_separation(inst: Instance, mode: str) -> str:
    if mode == "auto":
        return "exact" if len(inst.supply.edges) <= _EXACT_EDGE_CAP else "approximate"
    if mode in ("approx", "approximate"):
        return "approximate"
    if mode in SEPARATION_MODES:
        return mode
    raise ValueError(f"unknown separation mode {mode!r}")


def solve_relaxation(inst: Instance, mode: str = "auto",
                     max_rounds: int = 200) -> Tuple[RelaxationResult, LpDiversity]:
    """Solve the relaxation by cutting planes and package its diversity.

    With exact separation the objective is a true lower bound on the
    instance sparsity; approximate separation keeps that (its rows are a
    subset of the valid ones) but may stop short of the full optimum.

    Raises:
      RelaxationInfeasibleError: propagated from seeding.
      SeparationLimitError: round budget exhausted before clean separation.
      RuntimeError: the LP itself reports infeasible/unbounded, which a
        well-formed instance cannot produce.
    """
    mode = _resolve_separation(inst, mode)
    seed = build_relaxation_seed(inst)
    sol = cutting_plane(seed, lambda s: separate(inst, s, mode), max_rounds)
    if sol.status != "optimal":
        raise RuntimeError(f"relaxation master came back {sol.status}")
    if sol.round_limit_hit:
        raise SeparationLimitError(f"no clean separation after {sol.rounds} rounds")
    m_g = len(inst.supply.edges)
    d_vals = _clamped_d(inst, sol)
    y_vals = [float(v) for v in sol.values[m_g:]]
    objective = float(sum(w * d for (_, w), d in zip(inst.supply.edges, d_vals)))
    reweighted = inst.supply.reweighted(d_vals)
    oracle_mode = "exact" if m_g <= _EXACT_EDGE_CAP else "approximate"
    result = RelaxationResult(tuple(d_vals), tuple(y_vals), objective, mode, sol.rounds)
    return result, LpDiversity(reweighted, hypergraph_steiner_oracle(reweighted, oracle_mode))


# ---- rounding ----

def _round_candidates(inst: Instance,
                      emb: Embedding) -> Tuple[Cut, SparsityReport, float]:
    """Best pulled-back threshold cut plus the aggregate mediant ratio."""
    if emb.n != inst.n:
        raise ValueError("embedding and instance node counts differ")
    dec = l1_to_cuts(emb)
    alpha_of: Dict[int, float] = {}
    for side, alpha in dec.cuts:
        alpha_of[side] = alpha_of.get(side, 0.0) + alpha
    best: Optional[Tuple[float, Tuple[int, ...]]] = None
    best_pair: Optional[Tuple[Cut, SparsityReport]] = None
    agg_num = agg_den = 0.0
    for side in sorted(alpha_of):
        cut = Cut(inst.n, side)
        rep = sparsity(inst, cut)
        agg_num += alpha_of[side] * rep.numerator
        agg_den += alpha_of[side] * rep.denominator
        if rep.denominator <= 0:
            continue
        key = (rep.phi, members_of(side))
        if best is None or key < best:
            best = key
            best_pair = (cut, rep)
    if best_pair is None:
        raise ValueError("embedding collapsed: no pulled-back cut has demand")
    mediant = agg_num / agg_den if agg_den > 0 else math.inf
    return best_pair[0], best_pair[1], mediant


def round_cut(inst: Instance, emb: Embedding) -> Tuple[Cut, SparsityReport]:
    """Sparsest cut among the embedding's threshold cuts.

    The winner's sparsity never exceeds the alpha-weighted aggregate
    ratio of the full decomposition (mediant inequality).

    Raises:
      ValueError: the decomposition is empty or no cut separates demand.
    """
    cut, rep, _ = _round_candidates(inst, emb)
    return cut, rep


# ---- end-to-end solvers ----

def _thread_cap() -> int:
    env = os.environ.get("DIVCUT_THREADS", "")
    if env.strip():
        cap = int(env)
        if cap < 1:
            raise ValueError("DIVCUT_THREADS must be a positive integer")
        return cap
    return os.cpu_count() or 1


def _run_trials(metric, route: str, seed: int, trials: int,
                inst: Instance) -> Tuple[Embedding, Cut, SparsityReport, float]:
    """Embed and round `trials` times on derived streams; keep the cut with
    the smallest sparsity (ties to the earliest trial). Deterministic for a
    fixed seed no matter how many workers run."""
    children = np.random.SeedSequence(seed).spawn(trials)

    def one(idx: int):
        rng = np.random.default_rng(children[idx])
        if route in ("hs-frt", "steiner-frt"):
            emb = steiner_to_l1(metric, rng, trials=1)
        else:
            emb = diam_to_l1(metric, rng)
        try:
            cut, rep, mediant = _round_candidates(inst, emb)
        except ValueError:
            return None
        return emb, cut, rep, mediant

    workers = max(1, min(trials, _thread_cap()))
    if workers == 1:
        outcomes = [one(i) for i in range(trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one, range(trials)))
    best_idx = None
    for i, out in enumerate(outcomes):
        if out is None:
            continue
        if best_idx is None or out[2].phi < outcomes[best_idx][2].phi:
            best_idx = i
    if best_idx is None:
        raise ValueError("embedding collapsed on every trial")
    return outcomes[best_idx]


def _solve(inst: Instance, seed: int, trials: int, route: str,
           separation: str, brute: bool, measure_cap: Optional[int],
           max_rounds: int) -> SolveReport:
    t0 = time.perf_counter()
    relax, lpdiv = solve_relaxation(inst, separation, max_rounds)
    metric = metric_closure(lpdiv.supply)
    emb, cut, rep, mediant = _run_trials(metric, route, seed, trials, inst)
    phi_brute = ratio = None
    if brute:
        phi_brute = brute_sparsest_cut(inst).phi
        if phi_brute > 0:
            ratio = rep.phi / phi_brute
        else:
            ratio = 1.0 if rep.phi == 0 else math.inf
    distortion = None
    if measure_cap is not None:
        distortion = measure_distortion(lpdiv.oracle, emb, size_cap=measure_cap)
    return SolveReport(
        cut=cut, phi_rounded=rep.phi, lp_objective=relax.objective, route=route,
        phi_mediant=mediant, rounds=relax.rounds, separation_mode=relax.separation_mode,
        trials=trials, seconds=time.perf_counter() - t0,
        phi_brute=phi_brute, ratio=ratio, distortion=distortion)


def solve_general(inst: Instance, seed: int = 0, trials: int = 16,
                  route: str = "auto", separation: str = "auto",
                  brute: bool = False, measure_cap: Optional[int] = None,
                  max_rounds: int = 200) -> SolveReport:
    """Approximate the sparsest cut of a general supply/demand pair.

    The route defaults to whichever side has the smaller rank: dominating
    trees for the supply-side Steiner diversity (hs-frt) when
    r_G <= r_H, otherwise the diameter-based Frechet route justified by
    truncating the diversity at the demand rank (kdiam-frechet).

    Args:
      inst: the instance.
      seed: master seed; per-trial streams are derived from it.
      trials: independent embedding draws (the best rounded cut wins).
      route: auto or one of ROUTES.
      separation: auto (exact up to 20 supply edges), exact, approximate,
        or steiner-2approx (rank-2 supply only).
      brute: also compute the exact optimum and the approximation ratio.
      measure_cap: when set, record embedding-vs-LP-diversity distortion
        over subsets up to this size.
      max_rounds: cutting-plane budget.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if route == "auto":
        route = "hs-frt" if inst.supply.rank <= inst.demand.rank else "kdiam-frechet"
    if route not in ROUTES:
        raise ValueError(f"unknown route {route!r}")
    return _solve(inst, seed, trials, route, separation, brute, measure_cap, max_rounds)


def solve_supply_graph(inst: Instance, seed: int = 0, trials: int = 16,
                       brute: bool = False, measure_cap: Optional[int] = None,
                       max_rounds: int = 200) -> SolveReport:
    """Sparsest-cut pipeline specialized to rank-2 supply.

    Separation runs the constant-factor spanning-tree approximation and
    the embedding route is the dominating-tree one on the reweighted
    shortest-path metric (route label steiner-frt).

    Raises:
      ValueError: the supply has rank above 2.
    """
    if inst.supply.rank > 2:
        raise ValueError("supply-graph pipeline needs a rank-2 supply")
    return _solve(inst, seed, trials, "steiner-frt", "steiner-2approx",
                  brute, measure_cap, max_rounds)


# ---- aggregation ----

def report(results: Sequence[SolveReport]) -> Dict:
    """Aggregate solve reports into a plain summary dict.

    Raises:
      ValueError: empty input.
    """
    if not results:
        raise ValueError("nothing to aggregate")
    routes: Dict[str, int] = {}
    for r in results:
        routes[r.route] = routes.get(r.route, 0) + 1
    summary: Dict = {
        "count": len(results),
        "routes": {k: routes[k] for k in sorted(routes)},
        "phi_rounded": _quantiles([r.phi_rounded for r in results]),
    }
    ratios = [r.ratio for r in results if r.ratio is not None]
    if ratios:
        summary["ratio"] = _quantiles(ratios)
    gaps = [r.phi_rounded / r.lp_objective for r in results if r.lp_objective > 0]
    if gaps:
        summary["lp_gap"] = _quantiles(gaps)
    per_n: Dict[int, Dict] = {}
    for n in sorted({r.cut.n for r in results}):
        bucket = [r for r in results if r.cut.n == n]
        entry: Dict = {"count": len(bucket)}
        n_ratios = [r.ratio for r in bucket if r.ratio is not None]
        if n_ratios:
            entry["ratio"] = _quantiles(n_ratios)
        per_n[n] = entry
    summary["per_n"] = per_n
    return summary


def _quantiles(values: Sequence[float]) -> Dict[str, float]:
    ordered = sorted(values)
    k = len(ordered)
    median = (ordered[(k - 1) // 2] + ordered[k // 2]) / 2.0
    return {
        "min": ordered[0],
        "median": median,
        "max": ordered[-1],
        "mean": sum(ordered) / k,
    }
