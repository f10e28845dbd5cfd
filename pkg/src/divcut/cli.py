"""Command-line front end: generate instances, solve them, run Steiner and
embedding experiments, check diversity axioms, and benchmark.

Every command writes one JSON document to standard output (or to --out
when given) and keeps human-oriented chatter on the error stream, so the
data stream is script-safe. Outputs carry no timestamps or timings and all
randomness is seeded, which makes reruns byte-identical.

Exit codes: 0 success, 2 bad flags, 3 unreadable/invalid input files,
4 infeasible (uncoverable terminals or demand), 5 separation round limit,
6 axiom violations found.
"""

import argparse
import json
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from divcut.core import (
    Hypergraph,
    Instance,
    brute_sparsest_cut,
    generate,
    mask_of,
    members_of,
)
from divcut.diversity import (
    DiversityOracle,
    Metric,
    check_axioms,
    diameter_oracle,
    hypergraph_steiner_oracle,
    induced_metric,
    k_diameter_oracle,
    steiner_oracle,
    table_oracle,
)
from divcut.embed import (
    Embedding,
    WeightedTree,
    diam_to_l1,
    frt_embed,
    measure_distortion,
    naive_embed,
    tree_diversity_oracle,
    tree_to_l1,
)
from divcut.pipeline import (
    RelaxationInfeasibleError,
    SeparationLimitError,
    report,
    solve_general,
    solve_supply_graph,
)
from divcut.steiner import hsp_solve, metric_closure, metric_complete_graph

EXIT_OK = 0
EXIT_FLAGS = 2
EXIT_IO = 3
EXIT_INFEASIBLE = 4
EXIT_ROUND_LIMIT = 5
EXIT_VIOLATIONS = 6

_GEN_KINDS = ("path", "grid", "expander", "random", "hyper-uniform", "graph-hyper")
_CHECK_KINDS = ("hsp", "hsp-approx", "steiner", "diameter", "kdiam", "table")


# ---- serialization ----

def canon_weight(w: float) -> float:
    """Weights canonicalized to 12 significant digits (a fixed point of
    this rounding, so serialize/parse cycles are byte-stable)."""
    return float(f"{float(w):.12g}")


def instance_to_doc(inst: Instance) -> Dict:
    def side(h: Hypergraph) -> List[Dict]:
        return [{"edge": list(mem), "w": canon_weight(w)}
                for mem, w in h.member_lists()]

    return {"nodes": inst.n, "supply": side(inst.supply), "demand": side(inst.demand)}


def doc_to_instance(doc: Dict) -> Instance:
    if not isinstance(doc, dict):
        raise ValueError("instance document must be a JSON object")
    try:
        n = int(doc["nodes"])
        sides = []
        for key in ("supply", "demand"):
            edges = [(tuple(sorted(int(v) for v in rec["edge"])),
                      canon_weight(rec["w"])) for rec in doc[key]]
            sides.append(Hypergraph.from_edges(n, edges))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed instance document: {exc}") from exc
    return Instance(sides[0], sides[1])


def render(doc: Dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_instance(path: str) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        return doc_to_instance(json.load(fh))


def load_metric(path: str) -> Metric:
    """Metric file: the integer n followed by n*n whitespace-separated
    entries, row-major."""
    with open(path, "r", encoding="utf-8") as fh:
        tokens = fh.read().split()
    if not tokens:
        raise ValueError("metric file is empty")
    n = int(tokens[0])
    if len(tokens) != 1 + n * n:
        raise ValueError(f"metric file should hold {n * n} entries after n")
    d = np.array([float(t) for t in tokens[1:]], dtype=float).reshape(n, n)
    return Metric(d)


def _emit(doc: Dict, out: Optional[str]) -> None:
    text = render(doc)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {out}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---- commands ----

def cmd_gen(args) -> int:
    try:
        inst = generate(args.kind, seed=args.seed, n=args.n, m=args.m, rank=args.rank)
    except ValueError as exc:
        _say(f"bad generator flags: {exc}")
        return EXIT_FLAGS
    try:
        _emit(instance_to_doc(inst), args.out)
    except OSError as exc:
        _say(f"cannot write {args.out}: {exc}")
        return EXIT_IO
    _say(f"n={inst.n} m_G={len(inst.supply.edges)} m_H={len(inst.demand.edges)} "
         f"r_G={inst.supply.rank} r_H={inst.demand.rank}")
    return EXIT_OK


def cmd_solve(args) -> int:
    try:
        inst = load_instance(args.infile)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        _say(f"cannot load instance: {exc}")
        return EXIT_IO
    separation = {"approx": "approximate"}.get(args.separation, args.separation)
    try:
        if args.route == "steiner-frt":
            rep = solve_supply_graph(inst, seed=args.seed, trials=args.trials,
                                     brute=args.brute)
        else:
            rep = solve_general(inst, seed=args.seed, trials=args.trials,
                                route=args.route, separation=separation,
                                brute=args.brute)
    except RelaxationInfeasibleError as exc:
        _say(f"infeasible: {exc}")
        return EXIT_INFEASIBLE
    except SeparationLimitError as exc:
        _say(f"round limit: {exc}")
        return EXIT_ROUND_LIMIT
    except ValueError as exc:
        _say(f"bad solve flags: {exc}")
        return EXIT_FLAGS
    doc = {
        "cut": list(rep.cut.members),
        "lp_objective": rep.lp_objective,
        "n": inst.n,
        "phi_mediant": rep.phi_mediant,
        "phi_rounded": rep.phi_rounded,
        "rounds": rep.rounds,
        "route": rep.route,
        "seed": args.seed,
        "separation": rep.separation_mode,
        "trials": rep.trials,
    }
    if args.brute:
        doc["phi_brute"] = rep.phi_brute
        doc["ratio"] = rep.ratio
    try:
        _emit(doc, args.json_out)
    except OSError as exc:
        _say(f"cannot write {args.json_out}: {exc}")
        return EXIT_IO
    _say(f"phi={rep.phi_rounded:.6g} lp={rep.lp_objective:.6g} route={rep.route} "
         f"rounds={rep.rounds} ({rep.seconds:.2f}s)")
    return EXIT_OK


def cmd_hsp(args) -> int:
    try:
        inst = load_instance(args.infile)
        terminals = _parse_int_list(args.terminals)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        _say(f"cannot load inputs: {exc}")
        return EXIT_IO
    mode = {"approx": "approximate"}.get(args.mode, args.mode)
    try:
        sol = hsp_solve(inst.supply, terminals, mode=mode)
    except ValueError as exc:
        if "coverable" in str(exc):
            _say(f"infeasible: {exc}")
            return EXIT_INFEASIBLE
        _say(f"bad hsp flags: {exc}")
        return EXIT_FLAGS
    doc = {
        "cost": sol.cost,
        "edges": [list(members_of(inst.supply.edges[i][0])) for i in sol.selected],
        "mode": mode,
        "selected": list(sol.selected),
        "terminals": sorted(terminals),
    }
    _emit(doc, args.out)
    _say(f"cost={sol.cost:.6g} edges={len(sol.selected)}")
    return EXIT_OK


def _supply_as_tree(inst: Instance) -> WeightedTree:
    """The supply graph as a rooted tree (BFS from node 0), or a ValueError
    when it is not a connected acyclic rank-2 graph."""
    n = inst.n
    if inst.supply.rank > 2:
        raise ValueError("tree method needs a rank-2 supply")
    adj: List[List] = [[] for _ in range(n)]
    pair_count = 0
    for mask, w in inst.supply.edges:
        mem = members_of(mask)
        if len(mem) != 2:
            continue
        adj[mem[0]].append((mem[1], w))
        adj[mem[1]].append((mem[0], w))
        pair_count += 1
    if pair_count != n - 1:
        raise ValueError("tree method needs exactly n-1 pair edges")
    parent = [-1]
    weight = [0.0]
    tree_id = {0: 0}
    queue = [0]
    while queue:
        u = queue.pop(0)
        for v, w in sorted(adj[u]):
            if v not in tree_id:
                tree_id[v] = len(parent)
                parent.append(tree_id[u])
                weight.append(w)
                queue.append(v)
    if len(tree_id) != n:
        raise ValueError("tree method needs a connected supply")
    point_node = tuple(tree_id[v] for v in range(n))
    return WeightedTree(tuple(parent), tuple(weight), point_node)


def cmd_embed(args) -> int:
    if bool(args.infile) == bool(args.metric):
        _say("give exactly one of --in (instance) or --metric (matrix file)")
        return EXIT_FLAGS
    tree: Optional[WeightedTree] = None
    try:
        if args.infile:
            inst = load_instance(args.infile)
            if args.method == "tree":
                tree = _supply_as_tree(inst)
            metric = metric_closure(inst.supply)
        else:
            if args.method == "tree":
                _say("the tree method needs an instance file with a tree supply")
                return EXIT_FLAGS
            metric = load_metric(args.metric)
    except (OSError, json.JSONDecodeError) as exc:
        _say(f"cannot load input: {exc}")
        return EXIT_IO
    except ValueError as exc:
        if args.infile and args.method == "tree" and "tree method" in str(exc):
            _say(f"bad embed flags: {exc}")
            return EXIT_FLAGS
        _say(f"cannot load input: {exc}")
        return EXIT_IO
    rng = np.random.default_rng(args.seed)
    try:
        if args.method == "tree":
            emb = tree_to_l1(tree)
            reference = tree_diversity_oracle(tree)
            ref_name = "tree-diversity"
        else:
            if args.method == "frt":
                emb = tree_to_l1(frt_embed(metric, rng))
            elif args.method == "frechet":
                emb = diam_to_l1(metric, rng)
            else:
                emb = naive_embed(metric)
            reference = diameter_oracle(metric)
            ref_name = "diameter"
    except ValueError as exc:
        _say(f"embedding failed: {exc}")
        return EXIT_FLAGS
    cap = max(2, min(args.cap, emb.n))
    dist = measure_distortion(reference, emb, size_cap=cap)
    doc = {
        "c": dist.c,
        "c1": dist.c1,
        "c2": dist.c2,
        "cap": cap,
        "coords": [[float(v) for v in row] for row in emb.coords],
        "m": emb.m,
        "method": args.method,
        "n": emb.n,
        "reference": ref_name,
    }
    try:
        _emit(doc, args.out)
        if args.table:
            with open(args.table, "w", encoding="utf-8") as fh:
                fh.write(f"{emb.n} {emb.m}\n")
                for row in emb.coords:
                    fh.write(" ".join(repr(float(v)) for v in row) + "\n")
            _say(f"wrote {args.table}")
    except OSError as exc:
        _say(f"cannot write output: {exc}")
        return EXIT_IO
    _say(f"c1={dist.c1:.6g} c2={dist.c2:.6g} c={dist.c:.6g}")
    return EXIT_OK


def _load_table_oracle(path: str) -> DiversityOracle:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    n = int(doc["n"])
    table = {mask_of(rec["set"]): float(rec["value"]) for rec in doc["entries"]}
    return table_oracle(n, table)


def cmd_check(args) -> int:
    try:
        if args.oracle == "table":
            div = _load_table_oracle(args.infile)
        else:
            inst = load_instance(args.infile)
            if args.oracle == "hsp":
                div = hypergraph_steiner_oracle(inst.supply, "exact")
            elif args.oracle == "hsp-approx":
                div = hypergraph_steiner_oracle(inst.supply, "approximate")
            elif args.oracle == "steiner":
                div = steiner_oracle(inst.supply, "exact")
            elif args.oracle == "kdiam":
                base = hypergraph_steiner_oracle(inst.supply, "exact")
                k = args.k if args.k else max(2, inst.demand.rank)
                div = k_diameter_oracle(base, k)
            else:
                div = diameter_oracle(metric_closure(inst.supply))
    except (OSError, ValueError, json.JSONDecodeError, KeyError) as exc:
        _say(f"cannot build oracle: {exc}")
        return EXIT_IO
    cap = max(2, min(args.cap, div.n))
    companions = None
    if args.oracle != "table" and div.mode == "exact":
        metric = induced_metric(div)
        if not metric.has_disconnected:
            companions = {"diameter": diameter_oracle(metric)}
            if div.n <= 10:
                companions["steiner"] = steiner_oracle(
                    metric_complete_graph(metric), "exact")
    rep = check_axioms(div, max_subset_size=cap, companions=companions)
    doc = {
        "cap": cap,
        "ok": rep.ok,
        "oracle": args.oracle,
        "violations": [
            {"axiom": name,
             "sets": [list(members_of(m)) for m in masks],
             "values": list(values)}
            for name, masks, values in rep.violations
        ],
    }
    _emit(doc, args.out)
    _say("all axioms hold" if rep.ok else f"{len(rep.violations)} violation(s)")
    return EXIT_OK if rep.ok else EXIT_VIOLATIONS


def cmd_bench(args) -> int:
    try:
        sizes = _parse_int_list(args.sizes)
    except ValueError as exc:
        _say(f"bad suite: {exc}")
        return EXIT_FLAGS
    if not sizes or args.seeds < 1:
        _say("empty suite: need at least one size and one seed")
        return EXIT_FLAGS
    rows = []
    successes = []
    for n in sizes:
        for seed in range(args.seeds):
            row: Dict = {"kind": args.kind, "n": n, "seed": seed}
            try:
                inst = generate(args.kind, seed=seed, n=n, m=args.m, rank=args.rank)
                rep = solve_general(inst, seed=seed, trials=args.trials, brute=True)
                row.update({
                    "lp_objective": rep.lp_objective,
                    "phi_brute": rep.phi_brute,
                    "phi_rounded": rep.phi_rounded,
                    "ratio": rep.ratio,
                    "rounds": rep.rounds,
                    "route": rep.route,
                })
                successes.append(rep)
            except (ValueError, RuntimeError) as exc:
                row["error"] = str(exc)
            rows.append(row)
    doc = {"rows": rows, "summary": report(successes) if successes else None}
    try:
        _emit(doc, args.out)
    except OSError as exc:
        _say(f"cannot write {args.out}: {exc}")
        return EXIT_IO
    _say(f"{len(successes)}/{len(rows)} instances solved")
    return EXIT_OK if successes else 1


# ---- wiring ----

def _parse_int_list(text: str) -> List[int]:
    items = [t for t in text.replace(",", " ").split() if t]
    if not items:
        raise ValueError("expected a comma-separated list of integers")
    return [int(t) for t in items]


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="divcut",
        description="Generalized sparsest cut on hypergraphs via diversity "
                    "embeddings.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance file")
    g.add_argument("--kind", choices=_GEN_KINDS, default="random")
    g.add_argument("--n", type=int, default=8)
    g.add_argument("--m", type=int, default=10)
    g.add_argument("--rank", type=int, default=3)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="approximate the sparsest cut")
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--route", choices=("auto", "hs-frt", "kdiam-frechet",
                                       "steiner-frt"), default="auto")
    s.add_argument("--separation", choices=("auto", "exact", "approx"),
                   default="auto")
    s.add_argument("--trials", type=int, default=16)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--brute", action="store_true",
                   help="also compute the exact optimum and ratio")
    s.add_argument("--json-out", dest="json_out", default=None)
    s.set_defaults(func=cmd_solve)

    h = sub.add_parser("hsp", help="hypergraph Steiner cost of a terminal set")
    h.add_argument("--in", dest="infile", required=True)
    h.add_argument("--terminals", required=True,
                   help="comma-separated node ids")
    h.add_argument("--mode", choices=("exact", "approx", "approximate"),
                   default="exact")
    h.add_argument("--out", default=None)
    h.set_defaults(func=cmd_hsp)

    e = sub.add_parser("embed", help="embed a metric into l1 and measure "
                                     "distortion")
    e.add_argument("--in", dest="infile", default=None,
                   help="instance file (uses the supply's path metric)")
    e.add_argument("--metric", default=None, help="metric matrix file")
    e.add_argument("--method", choices=("frt", "frechet", "naive", "tree"),
                   default="frt")
    e.add_argument("--cap", type=int, default=4,
                   help="subset size cap for distortion measurement")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", default=None)
    e.add_argument("--table", default=None,
                   help="also write the raw coordinate table here")
    e.set_defaults(func=cmd_embed)

    c = sub.add_parser("check", help="hunt for diversity axiom violations")
    c.add_argument("--in", dest="infile", required=True)
    c.add_argument("--oracle", choices=_CHECK_KINDS, default="hsp")
    c.add_argument("--cap", type=int, default=4)
    c.add_argument("--k", type=int, default=0,
                   help="k for the kdiam oracle (default: demand rank)")
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_check)

    b = sub.add_parser("bench", help="generate/solve/brute a seeded grid")
    b.add_argument("--sizes", default="6,8,10",
                   help="comma-separated node counts")
    b.add_argument("--seeds", type=int, default=20)
    b.add_argument("--kind", choices=_GEN_KINDS, default="hyper-uniform")
    b.add_argument("--m", type=int, default=5)
    b.add_argument("--rank", type=int, default=3)
    b.add_argument("--trials", type=int, default=8)
    b.add_argument("--out", default=None)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
