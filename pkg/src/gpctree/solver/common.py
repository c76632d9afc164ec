"""Outcome type and conversions between stage placements and model values."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..ilpmodel import Cb, F, IlpModel, N, R, adder_span, carries


class SolverError(RuntimeError):
    pass


class Infeasible(SolverError):
    pass


OPTIMAL = "optimal"
FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNKNOWN = "unknown"


@dataclass
class SolveOutcome:
    status: str
    values: dict[str, int] = field(default_factory=dict)
    objective: int | None = None
    wall_time: float = 0.0
    solver: str = "builtin"

    @property
    def has_solution(self) -> bool:
        return self.status in (OPTIMAL, FEASIBLE)


# stage placements: list over stages of {(gpc index, anchor): count}
StagePlan = list[dict[tuple[int, int], int]]


def wire_index(model: IlpModel) -> int:
    for t, g in enumerate(model.gpcs):
        if g.is_wire:
            return t
    raise SolverError(f"profile {model.profile.name} has no pseudo-wire")


def complete_plan(model: IlpModel, plan: StagePlan) -> tuple[StagePlan, list[list[int]]]:
    """Add pseudo-wires for every uncovered bit; return the plan and all stage heaps."""
    width = model.width
    wire = wire_index(model)
    heaps = [[model.heap[c] for c in range(width)]]
    full: StagePlan = []
    for uses in plan:
        cur = heaps[-1]
        cap = [0] * width
        nxt = [0] * width
        stage = {k: n for k, n in uses.items() if n and k[0] != wire}
        for (t, a), n in stage.items():
            g = model.gpcs[t]
            for i, m in enumerate(g.inputs):
                if a + i < width:
                    cap[a + i] += m * n
            for j, k in enumerate(g.outputs):
                nxt[a + j] += k * n
        for c in range(width):
            short = cur[c] - cap[c]
            if short > 0:
                stage[(wire, c)] = short
                nxt[c] += short
        full.append(stage)
        heaps.append(nxt)
    return full, heaps


def assignment(model: IlpModel, plan: StagePlan) -> dict[str, int]:
    """Values for every model variable implied by a (wire-completed) plan."""
    full, heaps = complete_plan(model, plan)
    values = {v: 0 for v in model.variables}
    for s, h in enumerate(heaps):
        cs = carries(h)
        for c in range(model.width):
            values[N(s, c)] = h[c]
            values[Cb(s, c)] = cs[c]
    for s, uses in enumerate(full):
        for (t, a), n in uses.items():
            values[R(s, t, a)] = n
    span = adder_span(heaps[-1], model.result_width)
    if span is not None:
        for c in range(span[0], model.result_width):
            values[F(c)] = 1
    return values


def plan_from_values(model: IlpModel, values: dict[str, int]) -> StagePlan:
    plan: StagePlan = [dict() for _ in range(model.stages)]
    for p in model.placements:
        n = int(round(values.get(p.var, 0)))
        if n:
            plan[p.stage][(p.gpc, p.anchor)] = n
    return plan
