"""Redundancy screening of line-flow bounds.

Each line's upper and lower flow bound is tested independently: maximize
(respectively minimize) the line's flow over the relaxed feasible set —
commitments in [0, 1], every other flow bound in place, load either fixed
(sample-aware) or ranging over a box-and-level region (sample-agnostic),
optionally capped in cost.  A side whose bound cannot be attained, with a
margin of ``1e-6 * flow_limit``, is redundant and can be dropped from the
unit-commitment problem without changing its optimum.

Side indexing convention used by reports, datasets, and the KNN baseline:
side ``j`` is line j's upper bound, side ``m + j`` its lower bound.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (ContextMismatch, DimensionError, EmptyRegion,
                     NumericalError, ScreeningInfeasible)
from .formulation import (UcFormulation, UcInstance, assemble_screening,
                          assemble_uc, flow_lower_row, flow_upper_row)
from .lp import INFEASIBLE, OPTIMAL, solve_lp
from .milp import MilpProblem

__all__ = [
    "TOL_SCREEN_REL",
    "LoadRegion",
    "ScreeningContext",
    "LineVerdict",
    "ScreeningReport",
    "screen_line",
    "screen_all",
    "screen_all_keeping_infeasible",
    "reduce_by_mask",
    "reduce_instance",
]

TOL_SCREEN_REL = 1e-6

_log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LoadRegion:
    """Box (1±r) around a nominal load, intersected with a total-level plane."""

    nominal: np.ndarray
    variation: float
    level: float | None = None

    def __post_init__(self):
        nominal = np.asarray(self.nominal, dtype=float).copy()
        nominal.flags.writeable = False
        object.__setattr__(self, "nominal", nominal)
        r = float(self.variation)
        object.__setattr__(self, "variation", r)
        if not 0.0 <= r <= 1.0:
            raise EmptyRegion(f"variation must lie in [0, 1], got {r}")
        if nominal.ndim != 1 or np.any(nominal < 0):
            raise EmptyRegion("nominal load must be a nonnegative vector")
        total = float(nominal.sum())
        level = total if self.level is None else float(self.level)
        object.__setattr__(self, "level", level)
        slack = TOL_SCREEN_REL * max(total, 1.0)
        if not (1 - r) * total - slack <= level <= (1 + r) * total + slack:
            raise EmptyRegion(
                f"level {level} outside attainable totals "
                f"[{(1 - r) * total}, {(1 + r) * total}]")

    @property
    def lower(self) -> np.ndarray:
        return (1.0 - self.variation) * self.nominal

    @property
    def upper(self) -> np.ndarray:
        return (1.0 + self.variation) * self.nominal

    def contains(self, load, tol: float = 1e-6) -> bool:
        load = np.asarray(load, dtype=float)
        if load.shape != self.nominal.shape:
            return False
        scale = max(float(self.nominal.max(initial=0.0)), 1.0)
        if np.any(load < self.lower - tol * scale):
            return False
        if np.any(load > self.upper + tol * scale):
            return False
        return abs(load.sum() - self.level) <= tol * max(abs(self.level), 1.0)

    def to_json_dict(self) -> dict:
        return {"nominal": self.nominal.tolist(),
                "variation": self.variation,
                "level": self.level}

    @classmethod
    def from_json_dict(cls, d: dict) -> "LoadRegion":
        return cls(nominal=np.asarray(d["nominal"], dtype=float),
                   variation=d["variation"], level=d["level"])


@dataclass(frozen=True, eq=False)
class ScreeningContext:
    """What the screening LPs know: a fixed load or a region, plus an
    optional cost cap C̄ applied as gen_cost @ x <= C̄ * (1 + epsilon)."""

    load: np.ndarray | None = None
    region: LoadRegion | None = None
    cost_bound: float | None = None
    epsilon: float = 0.0

    def __post_init__(self):
        if (self.load is None) == (self.region is None):
            raise ValueError("exactly one of load/region must be given")
        if self.load is not None:
            load = np.asarray(self.load, dtype=float).copy()
            load.flags.writeable = False
            object.__setattr__(self, "load", load)
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.cost_bound is not None and self.cost_bound < 0:
            raise ValueError("cost_bound must be >= 0")

    @classmethod
    def sample_aware(cls, load, cost_bound: float | None = None,
                     epsilon: float = 0.0) -> "ScreeningContext":
        return cls(load=np.asarray(load, dtype=float), cost_bound=cost_bound,
                   epsilon=epsilon)

    @classmethod
    def sample_agnostic(cls, region: LoadRegion, cost_bound: float | None = None,
                        epsilon: float = 0.0) -> "ScreeningContext":
        return cls(region=region, cost_bound=cost_bound, epsilon=epsilon)

    @property
    def is_sample_aware(self) -> bool:
        return self.load is not None

    @property
    def effective_cost_bound(self) -> float | None:
        if self.cost_bound is None:
            return None
        return self.cost_bound * (1.0 + self.epsilon)

    def to_json_dict(self) -> dict:
        d: dict = {"cost_bound": self.cost_bound, "epsilon": self.epsilon}
        if self.is_sample_aware:
            d["mode"] = "aware"
            d["load"] = self.load.tolist()
        else:
            d["mode"] = "agnostic"
            d["region"] = self.region.to_json_dict()
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "ScreeningContext":
        if d["mode"] == "aware":
            return cls.sample_aware(d["load"], cost_bound=d["cost_bound"],
                                    epsilon=d["epsilon"])
        return cls.sample_agnostic(LoadRegion.from_json_dict(d["region"]),
                                   cost_bound=d["cost_bound"],
                                   epsilon=d["epsilon"])


@dataclass(frozen=True)
class LineVerdict:
    line: int
    upper_redundant: bool
    lower_redundant: bool
    max_flow: float
    min_flow: float

    def to_json_dict(self) -> dict:
        return {"line": self.line,
                "upper_redundant": self.upper_redundant,
                "lower_redundant": self.lower_redundant,
                "max_flow": self.max_flow,
                "min_flow": self.min_flow}


@dataclass(frozen=True, eq=False)
class ScreeningReport:
    verdicts: tuple[LineVerdict, ...]
    context: ScreeningContext

    @property
    def n_lines(self) -> int:
        return len(self.verdicts)

    @property
    def pct_reduced(self) -> float:
        """Fraction of the 2m bound-sides found redundant."""
        dropped = sum(v.upper_redundant + v.lower_redundant
                      for v in self.verdicts)
        return dropped / (2 * self.n_lines)

    @property
    def pct_lines_reduced(self) -> float:
        """Fraction of whole lines with both sides redundant."""
        dropped = sum(v.upper_redundant and v.lower_redundant
                      for v in self.verdicts)
        return dropped / self.n_lines

    def kept_mask(self) -> np.ndarray:
        """Boolean (2m,) kept-side mask: uppers first, then lowers."""
        m = self.n_lines
        mask = np.ones(2 * m, dtype=bool)
        for v in self.verdicts:
            mask[v.line] = not v.upper_redundant
            mask[m + v.line] = not v.lower_redundant
        return mask

    def to_json(self) -> str:
        doc = {"context": self.context.to_json_dict(),
               "verdicts": [v.to_json_dict() for v in self.verdicts],
               "pct_reduced": self.pct_reduced,
               "pct_lines_reduced": self.pct_lines_reduced}
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ScreeningReport":
        doc = json.loads(text)
        verdicts = tuple(
            LineVerdict(line=v["line"],
                        upper_redundant=v["upper_redundant"],
                        lower_redundant=v["lower_redundant"],
                        max_flow=v["max_flow"],
                        min_flow=v["min_flow"])
            for v in doc["verdicts"])
        return cls(verdicts=verdicts,
                   context=ScreeningContext.from_json_dict(doc["context"]))


def _directional_flow(form: UcFormulation, context, j: int,
                      direction: str) -> float:
    problem = assemble_screening(form, context, j, direction)
    sol = solve_lp(problem)
    if sol.status == INFEASIBLE:
        raise ScreeningInfeasible(j)
    if sol.status != OPTIMAL:
        raise NumericalError(
            f"screening LP for line {j} ({direction}) ended {sol.status}")
    return float(sol.objective_value)


def screen_line(form: UcFormulation, context: ScreeningContext,
                j: int) -> LineVerdict:
    """Max/min the line-j flow over the relaxed set and flag each side.

    Raises ScreeningInfeasible when the LP has no feasible point, which
    with a cost cap means C̄(1+ε) sits below the minimal relaxed cost;
    callers should raise epsilon or keep the line's constraints.
    """
    max_flow = _directional_flow(form, context, j, "max")
    min_flow = _directional_flow(form, context, j, "min")
    limit = float(form.f_max[j])
    tol = TOL_SCREEN_REL * limit
    return LineVerdict(
        line=j,
        upper_redundant=max_flow < limit - tol,
        lower_redundant=min_flow > -limit + tol,
        max_flow=max_flow,
        min_flow=min_flow,
    )


def _thread_count() -> int:
    raw = os.environ.get("UC_SCREEN_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def screen_all(form: UcFormulation,
               context: ScreeningContext) -> ScreeningReport:
    """Screen every line; fan out across threads when UC_SCREEN_THREADS > 1."""
    workers = min(_thread_count(), form.n_lines)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            verdicts = tuple(pool.map(
                lambda j: screen_line(form, context, j), range(form.n_lines)))
    else:
        verdicts = tuple(screen_line(form, context, j)
                         for j in range(form.n_lines))
    return ScreeningReport(verdicts=verdicts, context=context)


def screen_all_keeping_infeasible(form: UcFormulation,
                                  context: ScreeningContext
                                  ) -> tuple[ScreeningReport, int]:
    """screen_all, but a line whose LP is infeasible keeps both sides.

    Infeasibility signals a cost bound below the minimal relaxed cost;
    keeping the line is always safe.  Returns the report and the number
    of lines that fell back.
    """
    try:
        return screen_all(form, context), 0
    except ScreeningInfeasible:
        pass
    verdicts = []
    fallbacks = 0
    for j in range(form.n_lines):
        try:
            verdicts.append(screen_line(form, context, j))
        except ScreeningInfeasible:
            fallbacks += 1
            limit = float(form.f_max[j])
            _log.warning(
                "screening LP infeasible for line %d; keeping both sides", j)
            verdicts.append(LineVerdict(line=j, upper_redundant=False,
                                        lower_redundant=False,
                                        max_flow=limit, min_flow=-limit))
    return ScreeningReport(verdicts=tuple(verdicts), context=context), fallbacks


def reduce_by_mask(instance: UcInstance, kept_mask) -> MilpProblem:
    """The instance's MILP minus the flow bound-sides the mask drops.

    kept_mask has 2m booleans in side order (uppers, then lowers); kept
    rows are carried over bit-identical.
    """
    form = instance.formulation
    m = form.n_lines
    mask = np.asarray(kept_mask, dtype=bool)
    if mask.shape != (2 * m,):
        raise DimensionError(
            f"kept mask has shape {mask.shape}, expected ({2 * m},)")
    drop = [flow_upper_row(form, j) for j in range(m) if not mask[j]]
    drop += [flow_lower_row(form, j) for j in range(m) if not mask[m + j]]
    full = assemble_uc(form, instance.load)
    return MilpProblem(base=full.base.drop_rows(drop),
                       binary_vars=full.binary_vars)


def reduce_instance(instance: UcInstance,
                    report: ScreeningReport) -> MilpProblem:
    """Drop the report's redundant bound-sides from the instance's MILP.

    The report must cover the instance's load — same vector for a
    sample-aware context, region membership for a sample-agnostic one.
    """
    ctx = report.context
    load = instance.load
    if ctx.is_sample_aware:
        scale = max(float(np.abs(ctx.load).max(initial=0.0)), 1.0)
        if ctx.load.shape != load.shape or \
                np.abs(ctx.load - load).max(initial=0.0) > 1e-9 * scale:
            raise ContextMismatch(
                "report was screened for a different load vector")
    elif not ctx.region.contains(load):
        raise ContextMismatch("instance load lies outside the report's region")
    return reduce_by_mask(instance, report.kept_mask())
