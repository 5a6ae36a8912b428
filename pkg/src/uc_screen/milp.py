"""Branch-and-bound for LPs with binary variables.

Best-first search on the LP relaxation bound; branches on the most
fractional binary (ties to the lowest index), so the search order and
the returned optimum are deterministic.  Desk-scale instances only
(tens of binaries); no cuts, no presolve.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NodeLimitExceeded
from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LpProblem, LpSolution, solve_lp

__all__ = ["MilpProblem", "BnbStats", "solve_milp", "TOL_INT"]

TOL_INT = 1e-6        # integrality tolerance on binary variables
_TOL_PRUNE = 1e-9     # absolute incumbent pruning tolerance


@dataclass
class MilpProblem:
    base: LpProblem
    binary_vars: tuple[int, ...]

    def __post_init__(self):
        self.binary_vars = tuple(int(i) for i in self.binary_vars)
        n = self.base.n_vars
        for i in self.binary_vars:
            if not 0 <= i < n:
                raise DimensionError(f"binary index {i} out of range")
            if self.base.lb[i] < -TOL_INT or self.base.ub[i] > 1.0 + TOL_INT:
                raise DimensionError(
                    f"binary variable {i} has bounds outside [0, 1]")


@dataclass
class BnbStats:
    nodes_explored: int = 0
    lp_solves: int = 0
    wall_time: float = 0.0


@dataclass(order=True)
class _Node:
    key: float
    tiebreak: int
    lb: np.ndarray = field(compare=False)
    ub: np.ndarray = field(compare=False)


def solve_milp(problem: MilpProblem, node_limit: int = 10**6) -> tuple[LpSolution, BnbStats]:
    """Solve to proven optimality; returns the incumbent and search stats."""
    start = time.perf_counter()
    stats = BnbStats()
    base = problem.base
    binaries = np.asarray(problem.binary_vars, dtype=int)
    # internally a Min search; Max handled by flipping the comparison key
    better_sign = 1.0 if base.sense == "min" else -1.0

    incumbent: LpSolution | None = None
    incumbent_key = np.inf

    heap: list[_Node] = []
    counter = 0
    heapq.heappush(heap, _Node(key=-np.inf, tiebreak=counter,
                               lb=base.lb.copy(), ub=base.ub.copy()))

    while heap:
        node = heapq.heappop(heap)
        if node.key >= incumbent_key - _TOL_PRUNE:
            break  # best-first: every remaining node is at least as bad
        stats.nodes_explored += 1
        if stats.nodes_explored > node_limit:
            raise NodeLimitExceeded(f"explored more than {node_limit} nodes")

        relaxation = LpProblem(sense=base.sense, c=base.c, A=base.A,
                               relations=base.relations, b=base.b,
                               lb=node.lb, ub=node.ub, name=base.name)
        sol = solve_lp(relaxation)
        stats.lp_solves += 1
        if sol.status == INFEASIBLE:
            continue
        if sol.status == UNBOUNDED:
            stats.wall_time = time.perf_counter() - start
            return LpSolution(status=UNBOUNDED), stats

        key = better_sign * sol.objective_value
        if key >= incumbent_key - _TOL_PRUNE:
            continue

        frac = np.abs(sol.x[binaries] - np.round(sol.x[binaries]))
        if binaries.size == 0 or frac.max(initial=0.0) <= TOL_INT:
            incumbent = sol
            incumbent_key = key
            continue

        branch_var = int(binaries[np.argmin(np.abs(sol.x[binaries] - 0.5))])
        counter += 1
        down = _Node(key=key, tiebreak=counter, lb=node.lb.copy(), ub=node.ub.copy())
        down.ub[branch_var] = 0.0
        heapq.heappush(heap, down)
        counter += 1
        up = _Node(key=key, tiebreak=counter, lb=node.lb.copy(), ub=node.ub.copy())
        up.lb[branch_var] = 1.0
        heapq.heappush(heap, up)

    stats.wall_time = time.perf_counter() - start
    if incumbent is None:
        return LpSolution(status=INFEASIBLE), stats
    return LpSolution(status=OPTIMAL, x=incumbent.x,
                      objective_value=incumbent.objective_value,
                      iterations=incumbent.iterations), stats
