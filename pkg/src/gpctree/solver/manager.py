"""Stage-first runtime manager.

The stage budget grows from zero until the model becomes feasible; the
solve at that budget already minimizes LEs, so the result is optimal in
(stages, LEs) order.
"""

from __future__ import annotations

import logging
import os
from typing import Mapping

from ..benchgen import Benchmark
from ..gpclib import ArchProfile
from ..ilpmodel import build, column_count
from ..solution import Solution, make_final_adder, normalize_uses, stage_cost
from .builtin import DEFAULT_MAX_BITS, solve_builtin
from .common import INFEASIBLE, UNKNOWN, Infeasible, SolverError, complete_plan, plan_from_values
from .external import solve_external

log = logging.getLogger(__name__)

ENV_TIME_BUDGET = "GPCTREE_TIME_BUDGET"
DEFAULT_TIME_BUDGET = 300.0
DEFAULT_STAGE_LIMIT = 8


class SolveTimeout(SolverError):
    """No feasible point was found within the time budget."""


def default_time_budget() -> float:
    raw = os.environ.get(ENV_TIME_BUDGET)
    if not raw:
        return DEFAULT_TIME_BUDGET
    try:
        value = float(raw)
    except ValueError:
        raise SolverError(f"{ENV_TIME_BUDGET}={raw!r} is not a number") from None
    if value <= 0:
        raise SolverError(f"{ENV_TIME_BUDGET} must be positive")
    return value


def parse_solver(choice: str) -> tuple[str, str | None]:
    """``builtin``, ``external`` (bundled HiGHS bridge or env override) or ``external:<command>``."""
    if choice == "builtin":
        return "builtin", None
    if choice == "external":
        return "external", None
    if choice.startswith("external:") and choice[len("external:") :].strip():
        return "external", choice[len("external:") :].strip()
    raise ValueError(f"unknown solver {choice!r}; use builtin, external or external:<command>")


def build_solution(
    benchmark: Benchmark,
    profile: ArchProfile,
    plan: list[Mapping[tuple[str, int], int]],
    status: str,
    method: str,
    extra: dict | None = None,
) -> Solution:
    """Wrap named stage placements ``{(gpc, anchor): count}`` into a costed Solution."""
    stages = [normalize_uses({(a, g): n for (g, a), n in uses.items()}) for uses in plan]
    sol = Solution(
        benchmark=benchmark.name,
        profile=profile.name,
        heap=benchmark.heap,
        stages=stages,
        primary_cost=benchmark.primary_cost(profile),
        compression_cost=sum(stage_cost(uses, profile) for uses in stages),
        status=status,
        method=method,
        extra=dict(extra or {}),
    )
    sol.heights = sol.heaps(profile)
    sol.final_adder = make_final_adder(sol.heights[-1], column_count(benchmark.heap) - 1)
    return sol


def synthesize(
    benchmark: Benchmark,
    profile: ArchProfile,
    stage_limit: int = DEFAULT_STAGE_LIMIT,
    time_budget: float | None = None,
    solver: str = "builtin",
    max_bits: int | None = DEFAULT_MAX_BITS,
    min_stages: int = 0,
) -> Solution:
    """Cheapest tree at the smallest feasible stage count in ``min_stages..stage_limit``."""
    kind, command = parse_solver(solver)
    budget = default_time_budget() if time_budget is None else time_budget
    tried = []
    for st in range(min_stages, stage_limit + 1):
        model = build(benchmark.heap, profile, st)
        if kind == "builtin":
            out = solve_builtin(model, budget, max_bits)
        else:
            out = solve_external(model, command, budget)
        log.info("%s on %s: St=%d %s (%.2fs)", benchmark.name, profile.name, st, out.status, out.wall_time)
        tried.append({"stages": st, "status": out.status})
        if out.status == INFEASIBLE:
            continue
        if out.status == UNKNOWN:
            raise SolveTimeout(f"{benchmark.name}/{profile.name}: no solution at {st} stage(s) within {budget:g} s")
        # surplus zero-cost wires are legal in the model; keep exactly one per uncovered bit
        plan, _ = complete_plan(model, plan_from_values(model, out.values))
        named = [{(model.gpcs[t].name, a): n for (t, a), n in uses.items()} for uses in plan]
        sol = build_solution(benchmark, profile, named, out.status, f"ilp/{kind}", {"sweep": tried})
        if sol.compression_cost + sol.adder_cost != out.objective:
            raise SolverError(
                f"decoded cost {sol.compression_cost + sol.adder_cost} differs from solver objective {out.objective}"
            )
        return sol
    raise Infeasible(f"{benchmark.name}/{profile.name}: infeasible with up to {stage_limit} stage(s)")

