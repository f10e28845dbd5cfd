"""Small dense linear programming: a two-phase primal simplex with Bland's
rule, and the cutting-plane driver that grows a model with lazily separated
rows.

The solver targets the tiny LPs this package produces (hundreds of
variables and rows), so it keeps a full dense tableau and favors
reproducibility over speed: Bland's pivoting rule is deterministic and
cannot cycle, and near-zero pivot elements are refused.
"""

import math
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "LpModel",
    "LpSolution",
    "Row",
    "simplex_solve",
    "cutting_plane",
    "dump_lp",
    "FEAS_TOL",
]

FEAS_TOL = 1e-7
_EPS = 1e-9
_PIVOT_CAP = 10**6

RELATIONS = (">=", "<=", "=")

Row = Tuple[Tuple[float, ...], str, float]


# ---- model containers ----

@dataclass(frozen=True)
class LpModel:
    """A minimization LP: min c.x subject to rows, x >= lower bounds.

    Rows are (coefficients, relation, rhs) with relation one of >=, <=, =.
    Lower bounds default to zero for every variable; there are no upper
    bounds (regular rows express them when needed).
    """

    names: Tuple[str, ...]
    objective: Tuple[float, ...]
    rows: Tuple[Row, ...] = ()
    lower_bounds: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        n = len(self.names)
        if len(self.objective) != n:
            raise ValueError("objective length does not match variable count")
        if len(set(self.names)) != n:
            raise ValueError("variable names must be unique")
        if self.lower_bounds is not None and len(self.lower_bounds) != n:
            raise ValueError("lower bound count does not match variable count")
        for c in self.objective:
            if not math.isfinite(c):
                raise ValueError("objective coefficients must be finite")
        if self.lower_bounds is not None:
            for b in self.lower_bounds:
                if not math.isfinite(b):
                    raise ValueError("lower bounds must be finite")
        for i, (coeffs, rel, rhs) in enumerate(self.rows):
            if len(coeffs) != n:
                raise ValueError(f"row {i} has wrong arity")
            if rel not in RELATIONS:
                raise ValueError(f"row {i} has unknown relation {rel!r}")
            if not (math.isfinite(rhs) and all(math.isfinite(c) for c in coeffs)):
                raise ValueError(f"row {i} has non-finite data")

    @property
    def n(self) -> int:
        return len(self.names)

    def with_rows(self, extra: Sequence[Row]) -> "LpModel":
        """A copy of the model with the given rows appended."""
        new = tuple(self.rows) + tuple(
            (tuple(float(c) for c in coeffs), rel, float(rhs))
            for coeffs, rel, rhs in extra)
        return replace(self, rows=new)


@dataclass(frozen=True)
class LpSolution:
    """Solver outcome. `values` is empty unless status == "optimal".

    rounds / round_limit_hit are filled by cutting_plane; a plain
    simplex_solve leaves them at their defaults.
    """

    status: str
    values: Tuple[float, ...]
    objective: float
    rounds: int = 0
    round_limit_hit: bool = False

    def value_of(self, model: LpModel, name: str) -> float:
        return self.values[model.names.index(name)]


# ---- simplex ----

def simplex_solve(model: LpModel) -> LpSolution:
    """Solve the model with a two-phase dense primal simplex.

    Bland's smallest-index rule picks the entering column and breaks ratio
    ties, which precludes cycling; pivot elements below 1e-9 are never used.
    Infeasible and unbounded models come back as statuses, not exceptions.

    Raises:
      RuntimeError: the pivot cap (10^6) is exhausted, which signals a
        numerically stuck instance far beyond this solver's design scale.
    """
    n = model.n
    lb = np.array(model.lower_bounds if model.lower_bounds is not None else [0.0] * n)
    c = np.array(model.objective, dtype=float)

    # shift to x' = x - lb >= 0 and normalize every rhs to be nonnegative
    rows = []
    for coeffs, rel, rhs in model.rows:
        a = np.array(coeffs, dtype=float)
        b = float(rhs) - float(a @ lb)
        if b < 0:
            a, b = -a, -b
            rel = {">=": "<=", "<=": ">=", "=": "="}[rel]
        rows.append((a, rel, b))

    m = len(rows)
    n_slack = sum(1 for _, rel, _ in rows if rel != "=")
    art_rows = [i for i, (_, rel, _) in enumerate(rows) if rel != "<="]
    n_art = len(art_rows)
    width = n + n_slack + n_art + 1

    T = np.zeros((m, width))
    basis = [-1] * m
    slack_at = n
    art_at = n + n_slack
    for i, (a, rel, b) in enumerate(rows):
        T[i, :n] = a
        T[i, -1] = b
        if rel == "<=":
            T[i, slack_at] = 1.0
            basis[i] = slack_at
            slack_at += 1
        elif rel == ">=":
            T[i, slack_at] = -1.0
            slack_at += 1
    for i in art_rows:
        T[i, art_at] = 1.0
        basis[i] = art_at
        art_at += 1

    pivots = [0]

    if n_art:
        # phase 1: minimize the artificial total
        obj = np.zeros(width)
        obj[n + n_slack:width - 1] = 1.0
        for i, (a, rel, b) in enumerate(rows):
            if basis[i] >= n + n_slack:
                obj -= T[i]
        status = _iterate(T, obj, basis, pivots, allow_above=n + n_slack)
        if status != "optimal":
            return LpSolution("infeasible", (), math.inf)
        if -obj[-1] > FEAS_TOL:
            return LpSolution("infeasible", (), math.inf)
        T, basis = _purge_artificials(T, basis, n + n_slack)

    obj = np.zeros(T.shape[1])
    obj[:n] = c
    for i, bi in enumerate(basis):
        if obj[bi] != 0.0:
            obj -= obj[bi] * T[i]
    status = _iterate(T, obj, basis, pivots, allow_above=T.shape[1] - 1)
    if status != "optimal":
        return LpSolution(status, (), -math.inf)

    shifted = np.zeros(T.shape[1] - 1)
    for i, bi in enumerate(basis):
        shifted[bi] = T[i, -1]
    x = shifted[:n] + lb
    objective = float(c @ x)
    return LpSolution("optimal", tuple(float(v) for v in x), objective)


def _iterate(T: np.ndarray, obj: np.ndarray, basis: List[int],
             pivots: List[int], allow_above: int) -> str:
    """Run Bland pivots until optimal or unbounded; columns at or past
    `allow_above` (artificials) never enter."""
    m = T.shape[0]
    while True:
        entering = -1
        for j in range(allow_above):
            if obj[j] < -_EPS:
                entering = j
                break
        if entering < 0:
            return "optimal"
        best = None  # (ratio, basis index, row)
        for i in range(m):
            a = T[i, entering]
            if a > _EPS:
                key = (T[i, -1] / a, basis[i], i)
                if best is None or key < best:
                    best = key
        if best is None:
            return "unbounded"
        _pivot(T, obj, basis, best[2], entering)
        pivots[0] += 1
        if pivots[0] > _PIVOT_CAP:
            raise RuntimeError("simplex pivot cap exceeded")


def _pivot(T: np.ndarray, obj: np.ndarray, basis: List[int], r: int, e: int):
    T[r] /= T[r, e]
    col = T[:, e].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    obj -= obj[e] * T[r]
    basis[r] = e


def _purge_artificials(T: np.ndarray, basis: List[int], art_start: int):
    """Pivot leftover artificials out of the basis (dropping dependent rows),
    then cut the artificial columns from the tableau."""
    keep = []
    obj = np.zeros(T.shape[1])  # pivoting needs an objective row; a dummy works
    for i in range(T.shape[0]):
        if basis[i] < art_start:
            keep.append(i)
            continue
        swap = next((j for j in range(art_start) if abs(T[i, j]) > _EPS), None)
        if swap is None:
            continue  # redundant row
        _pivot(T, obj, basis, i, swap)
        keep.append(i)
    T = T[keep]
    basis = [basis[i] for i in keep]
    T = np.hstack([T[:, :art_start], T[:, -1:]])
    return T, basis


# ---- cutting planes ----

def cutting_plane(model: LpModel,
                  separator: Callable[[LpSolution], Sequence[Row]],
                  max_rounds: int = 60) -> LpSolution:
    """Alternate solving and separating until no violated row remains.

    Each round solves the current model; the separator inspects the
    optimum and returns rows it violates (empty means done). A non-optimal
    master or an exhausted round budget ends the loop, the latter with
    round_limit_hit set on the last solution.

    Args:
      model: seed model (must already bound the first solve).
      separator: callback mapping an optimal solution to violated rows.
      max_rounds: solve/separate iterations to allow.
    """
    if max_rounds < 1:
        raise ValueError("need at least one round")
    for round_no in range(1, max_rounds + 1):
        sol = simplex_solve(model)
        if sol.status != "optimal":
            return replace(sol, rounds=round_no)
        extra = separator(sol)
        if not extra:
            return replace(sol, rounds=round_no)
        model = model.with_rows(extra)
    return replace(sol, rounds=max_rounds, round_limit_hit=True)


# ---- debugging aid ----

def dump_lp(model: LpModel) -> str:
    """The model in a CPLEX-LP-flavored plaintext form, for eyeballing."""
    def term(c, name, lead):
        sign = "-" if c < 0 else ("" if lead else "+")
        mag = abs(c)
        return f"{sign} {mag:g} {name}".strip() if not lead else f"{sign}{mag:g} {name}"

    lines = ["Minimize"]
    parts = [term(c, x, i == 0) for i, (c, x) in enumerate(zip(model.objective, model.names))]
    lines.append(" obj: " + (" ".join(parts) if parts else "0"))
    lines.append("Subject To")
    for i, (coeffs, rel, rhs) in enumerate(model.rows):
        body = " ".join(term(c, x, j == 0)
                        for j, (c, x) in enumerate(zip(coeffs, model.names)) if c != 0)
        lines.append(f" c{i}: {body or '0'} {rel} {rhs:g}")
    lines.append("Bounds")
    lb = model.lower_bounds or (0.0,) * model.n
    for b, x in zip(lb, model.names):
        lines.append(f" {x} >= {b:g}")
    lines.append("End")
    return "\n".join(lines)
