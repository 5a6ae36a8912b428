"""Dense linear-program solver: two-phase primal simplex.

Problems are stated over variables with arbitrary [lo, hi] bounds and
rows with <=, =, >= relations.  At solve time the problem is shifted and
split into standard form (all variables >= 0, rows with slack/artificial
columns) and solved on a dense tableau.  Pricing is Dantzig's rule,
falling back to Bland's rule after 2*(rows+cols) iterations so the
solver terminates on degenerate/cycling instances.

Desk-scale problems only (a few hundred variables); no sparsity, no
warm starts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NumericalError

__all__ = [
    "LpProblem",
    "LpSolution",
    "solve_lp",
    "constraint_residuals",
    "to_lp_format",
    "OPTIMAL",
    "INFEASIBLE",
    "UNBOUNDED",
    "TOL_FEAS",
    "TOL_PIVOT",
]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

TOL_PIVOT = 1e-10   # smallest acceptable pivot element
TOL_FEAS = 1e-7     # feasibility certificate tolerance
_TOL_COST = 1e-9    # reduced-cost threshold for entering candidates

_RELATIONS = ("<=", "=", ">=")


@dataclass
class LpProblem:
    """min/max c@x subject to A x {<=,=,>=} b and lb <= x <= ub."""

    sense: str
    c: np.ndarray
    A: np.ndarray
    relations: tuple[str, ...]
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    name: str = "lp"
    row_names: tuple[str, ...] | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float)
        self.relations = tuple(self.relations)
        n = self.c.shape[0]
        if self.A.size == 0:
            self.A = self.A.reshape(0, n)
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        self.validate()

    def validate(self):
        n = self.n_vars
        if self.sense not in ("min", "max"):
            raise DimensionError(f"unknown sense {self.sense!r}")
        if self.A.shape != (self.n_rows, n):
            raise DimensionError(
                f"A has shape {self.A.shape}, expected ({self.n_rows}, {n})")
        if len(self.relations) != self.n_rows:
            raise DimensionError("one relation required per row")
        bad = [r for r in self.relations if r not in _RELATIONS]
        if bad:
            raise DimensionError(f"unknown relations {bad}")
        if self.lb.shape != (n,) or self.ub.shape != (n,):
            raise DimensionError("bound vectors must match variable count")
        if np.any(self.lb > self.ub):
            raise DimensionError("lb > ub for some variable")
        if self.row_names is not None and len(self.row_names) != self.n_rows:
            raise DimensionError("one row name required per row when named")

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]

    @property
    def n_rows(self) -> int:
        return self.b.shape[0]

    def drop_rows(self, indices) -> "LpProblem":
        """A copy of the problem with the given rows removed, others intact."""
        keep = np.setdiff1d(np.arange(self.n_rows), np.asarray(indices, dtype=int))
        names = None
        if self.row_names is not None:
            names = tuple(self.row_names[i] for i in keep)
        return LpProblem(
            sense=self.sense,
            c=self.c.copy(),
            A=self.A[keep].copy(),
            relations=tuple(self.relations[i] for i in keep),
            b=self.b[keep].copy(),
            lb=self.lb.copy(),
            ub=self.ub.copy(),
            name=self.name,
            row_names=names,
        )


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective_value: float | None = None
    iterations: int = 0


@dataclass
class _StandardForm:
    """Bookkeeping for the shift/split variable transformation."""

    A: np.ndarray
    b: np.ndarray
    relations: list
    c: np.ndarray
    # per original variable: ("shift", col, lo) | ("reflect", col, hi)
    # | ("split", col_pos, col_neg)
    var_map: list = field(default_factory=list)
    n_cols: int = 0


def _to_standard_form(p: LpProblem) -> _StandardForm:
    n = p.n_vars
    sign = -1.0 if p.sense == "max" else 1.0

    kinds = []
    n_cols = 0
    for i in range(n):
        lo, hi = p.lb[i], p.ub[i]
        if np.isfinite(lo):
            kinds.append(("shift", n_cols, lo))
            n_cols += 1
        elif np.isfinite(hi):
            kinds.append(("reflect", n_cols, hi))
            n_cols += 1
        else:
            kinds.append(("split", n_cols, n_cols + 1))
            n_cols += 2

    upper_rows = [i for i in range(n)
                  if np.isfinite(p.lb[i]) and np.isfinite(p.ub[i])]
    m = p.n_rows + len(upper_rows)

    A = np.zeros((m, n_cols))
    b = np.empty(m)
    b[:p.n_rows] = p.b
    relations = list(p.relations)
    c = np.zeros(n_cols)

    for i, kind in enumerate(kinds):
        col_orig = p.A[:, i]
        if kind[0] == "shift":
            _, j, lo = kind
            A[:p.n_rows, j] = col_orig
            c[j] = sign * p.c[i]
            if lo != 0.0:
                b[:p.n_rows] -= col_orig * lo
        elif kind[0] == "reflect":
            _, j, hi = kind
            A[:p.n_rows, j] = -col_orig
            c[j] = -sign * p.c[i]
            b[:p.n_rows] -= col_orig * hi
        else:
            _, jp, jn = kind
            A[:p.n_rows, jp] = col_orig
            A[:p.n_rows, jn] = -col_orig
            c[jp] = sign * p.c[i]
            c[jn] = -sign * p.c[i]

    for row_offset, i in enumerate(upper_rows):
        row = p.n_rows + row_offset
        _, j, lo = kinds[i]
        A[row, j] = 1.0
        b[row] = p.ub[i] - lo
        relations.append("<=")

    return _StandardForm(A=A, b=b, relations=relations, c=c,
                         var_map=kinds, n_cols=n_cols)


def _recover_x(sf: _StandardForm, y: np.ndarray, n_vars: int) -> np.ndarray:
    x = np.empty(n_vars)
    for i, kind in enumerate(sf.var_map):
        if kind[0] == "shift":
            x[i] = kind[2] + y[kind[1]]
        elif kind[0] == "reflect":
            x[i] = kind[2] - y[kind[1]]
        else:
            x[i] = y[kind[1]] - y[kind[2]]
    return x


def _pivot(T: np.ndarray, basis: np.ndarray, r: int, j: int) -> None:
    T[r] /= T[r, j]
    T[r, j] = 1.0
    col = T[:, j].copy()
    col[r] = 0.0
    T -= col[:, None] * T[r][None, :]
    T[:, j] = 0.0
    T[r, j] = 1.0
    basis[r] = j


def _ratio_test(T: np.ndarray, basis: np.ndarray, j: int, m: int):
    col = T[:m, j]
    rhs = T[:m, -1]
    eligible = col > TOL_PIVOT
    if not eligible.any():
        return None
    ratios = np.full(m, np.inf)
    ratios[eligible] = rhs[eligible] / col[eligible]
    best = ratios.min()
    window = best + 1e-10 * (1.0 + abs(best))
    candidates = np.flatnonzero(ratios <= window)
    # smallest basis index breaks ties, which keeps Bland's rule intact
    return candidates[np.argmin(basis[candidates])]


def _run_simplex(T: np.ndarray, basis: np.ndarray, m: int,
                 iteration_start: int, bland_after: int, hard_cap: int):
    """Pivot until optimal/unbounded.  Returns (status, iterations)."""
    iterations = iteration_start
    while True:
        reduced = T[-1, :-1]
        if iterations < bland_after:
            j = int(np.argmin(reduced))
            if reduced[j] >= -_TOL_COST:
                return "optimal", iterations
        else:
            below = np.flatnonzero(reduced < -_TOL_COST)
            if below.size == 0:
                return "optimal", iterations
            j = int(below[0])
        r = _ratio_test(T, basis, j, m)
        if r is None:
            return "unbounded", iterations
        _pivot(T, basis, r, j)
        iterations += 1
        if iterations >= hard_cap:
            raise NumericalError(
                f"simplex exceeded {hard_cap} iterations (cycling safeguards failed)")


def solve_lp(problem: LpProblem) -> LpSolution:
    """Solve an LP; deterministic for a fixed input."""
    sf = _to_standard_form(problem)
    m, n0 = sf.A.shape

    # orient all rows to b >= 0 so slack columns can seed the basis
    A = sf.A.copy()
    b = sf.b.copy()
    relations = list(sf.relations)
    for i in range(m):
        if b[i] < 0:
            A[i] = -A[i]
            b[i] = -b[i]
            if relations[i] == "<=":
                relations[i] = ">="
            elif relations[i] == ">=":
                relations[i] = "<="

    n_slack = sum(1 for r in relations if r != "=")
    art_rows = [i for i, r in enumerate(relations) if r != "<="]
    n_art = len(art_rows)
    N = n0 + n_slack + n_art

    T = np.zeros((m + 1, N + 1))
    T[:m, :n0] = A
    T[:m, -1] = b
    basis = np.empty(m, dtype=int)

    slack_col = n0
    art_col = n0 + n_slack
    for i, rel in enumerate(relations):
        if rel == "<=":
            T[i, slack_col] = 1.0
            basis[i] = slack_col
            slack_col += 1
        elif rel == ">=":
            T[i, slack_col] = -1.0
            slack_col += 1
            T[i, art_col] = 1.0
            basis[i] = art_col
            art_col += 1
        else:
            T[i, art_col] = 1.0
            basis[i] = art_col
            art_col += 1

    bland_after = 2 * (m + N)
    hard_cap = max(20000, 200 * (m + N))
    iterations = 0

    if n_art:
        # phase 1: minimize the sum of artificials
        T[-1, n0 + n_slack:N] = 1.0
        for i in range(m):
            if basis[i] >= n0 + n_slack:
                T[-1] -= T[i]
        status, iterations = _run_simplex(T, basis, m, 0, bland_after, hard_cap)
        if status == "unbounded":
            raise NumericalError("phase-1 objective unbounded below")
        phase1_value = -T[-1, -1]
        if phase1_value > TOL_FEAS * (1.0 + float(np.abs(b).max(initial=0.0))):
            return LpSolution(status=INFEASIBLE, iterations=iterations)

        # drive leftover artificials out of the basis; drop redundant rows
        drop = []
        for i in range(m):
            if basis[i] < n0 + n_slack:
                continue
            row = T[i, :n0 + n_slack]
            candidates = np.flatnonzero(np.abs(row) > TOL_PIVOT)
            if candidates.size:
                _pivot(T, basis, i, int(candidates[0]))
            else:
                drop.append(i)
        if drop:
            keep = np.setdiff1d(np.arange(m), drop)
            T = np.vstack([T[keep], T[-1][None, :]])
            basis = basis[keep]
            m = len(keep)

        # excise artificial columns
        T = np.hstack([T[:, :n0 + n_slack], T[:, -1:]])
        N = n0 + n_slack

    # phase 2 objective row
    T[-1, :] = 0.0
    T[-1, :n0] = sf.c
    for i in range(m):
        coef = T[-1, basis[i]]
        if coef != 0.0:
            T[-1] -= coef * T[i]

    status, iterations = _run_simplex(T, basis, m, iterations, bland_after, hard_cap)
    if status == "unbounded":
        return LpSolution(status=UNBOUNDED, iterations=iterations)

    y = np.zeros(N)
    y[basis] = T[:m, -1]
    x = _recover_x(sf, y, problem.n_vars)
    value = float(problem.c @ x)
    return LpSolution(status=OPTIMAL, x=x, objective_value=value,
                      iterations=iterations)


def constraint_residuals(problem: LpProblem, x: np.ndarray) -> np.ndarray:
    """Violation magnitudes for all rows and bounds (0 when satisfied)."""
    Ax = problem.A @ x
    res = []
    for i, rel in enumerate(problem.relations):
        gap = Ax[i] - problem.b[i]
        if rel == "<=":
            res.append(max(gap, 0.0))
        elif rel == ">=":
            res.append(max(-gap, 0.0))
        else:
            res.append(abs(gap))
    lower = np.where(np.isfinite(problem.lb), problem.lb - x, -np.inf)
    upper = np.where(np.isfinite(problem.ub), x - problem.ub, -np.inf)
    res.extend(np.maximum(lower, 0.0).tolist())
    res.extend(np.maximum(upper, 0.0).tolist())
    return np.asarray(res)


def _format_terms(coeffs: np.ndarray, names: list) -> str:
    parts = []
    for coef, name in zip(coeffs, names):
        if coef == 0.0:
            continue
        lead = "-" if coef < 0 else ("+" if parts else "")
        parts.append(f"{lead} {abs(coef):.17g} {name}".strip())
    return " ".join(parts) if parts else "0 " + names[0]


def to_lp_format(problem: LpProblem) -> str:
    """Render the problem in CPLEX LP text format (for external cross-checks)."""
    names = [f"x{i}" for i in range(problem.n_vars)]
    out = [f"\\ Problem: {problem.name}"]
    out.append("Maximize" if problem.sense == "max" else "Minimize")
    out.append(f" obj: {_format_terms(problem.c, names)}")
    out.append("Subject To")
    for i in range(problem.n_rows):
        rel = {"<=": "<=", ">=": ">=", "=": "="}[problem.relations[i]]
        row = problem.row_names[i] if problem.row_names else f"c{i}"
        out.append(f" {row}: {_format_terms(problem.A[i], names)} {rel} {problem.b[i]:.17g}")
    out.append("Bounds")
    for i, name in enumerate(names):
        lo, hi = problem.lb[i], problem.ub[i]
        if not np.isfinite(lo) and not np.isfinite(hi):
            out.append(f" {name} free")
            continue
        lo_s = "-infinity" if not np.isfinite(lo) else f"{lo:.17g}"
        hi_s = "+infinity" if not np.isfinite(hi) else f"{hi:.17g}"
        out.append(f" {lo_s} <= {name} <= {hi_s}")
    out.append("End")
    return "\n".join(out) + "\n"
