"""Exact depth-first branch and bound for small compressor-tree models.

The search walks the stages in order.  Inside a stage it sweeps columns from
least significant up, choosing how many copies of each GPC to anchor at the
current column; once a column's anchors are fixed its outgoing height is
known.  Uncovered bits pass through on pseudo-wires.

Pruning relies on three facts:

* placements that cover no live bit can be dropped, because the cost to
  finish is monotone in the heap heights;
* a placement whose live coverage is no larger, whose outputs are no fewer
  and whose cost is no lower than another at the same anchor is never needed;
* every bit-eliminating LE removes at most ``best efficiency`` bits, and a
  column shrinks by at most the widest single-column GPC input per stage.

The last stage is solved exactly by a memoized column sweep that checks the
final-adder rule as columns close.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from ..gpclib import RAGGED_CPA
from ..ilpmodel import (
    ADDER_LE_PER_COLUMN,
    RAGGED_C,
    RAGGED_N,
    RAGGED_NC,
    TERNARY_N,
    IlpModel,
    residue_ok,
)
from .common import FEASIBLE, INFEASIBLE, OPTIMAL, UNKNOWN, SolveOutcome, StagePlan, assignment

INF = math.inf
DEFAULT_MAX_BITS = 64


class _Timeout(Exception):
    pass


@dataclass(frozen=True)
class _Cand:
    t: int
    inputs: tuple[int, ...]  # relative to anchor, clipped to the model width
    outputs: tuple[int, ...]
    cost: int


def _pad(v: tuple[int, ...], n: int) -> tuple[int, ...]:
    return tuple(v) + (0,) * (n - len(v))


class _Search:
    def __init__(self, model: IlpModel, deadline: float):
        self.model = model
        self.width = model.width
        self.result_width = model.result_width
        self.rule = model.final_rule
        self.deadline = deadline
        self.ticks = 0
        self.by_anchor: list[list[_Cand]] = [[] for _ in range(self.width)]
        for t, g in enumerate(model.gpcs):
            if g.is_wire:
                continue
            for a in range(self.width - g.out_width + 1):
                ins = tuple(g.inputs[: self.width - a])
                self.by_anchor[a].append(_Cand(t, ins, g.outputs, g.cost))
        compressing = [g for g in model.gpcs if not g.is_wire]
        self.max_col_in = max((max(g.inputs) for g in compressing), default=1)
        # a placement covering column c always emits a bit into column c
        self.shrink_ok = all(
            g.out_width >= g.in_width and all(k >= 1 for k in g.outputs[: g.in_width]) for g in compressing
        )
        self.best_eff = max((Fraction(g.p - g.q, g.cost) for g in compressing if g.cost > 0), default=Fraction(0))
        self.max_residue_bits = self._max_residue_bits()
        self.memo: dict[tuple[int, tuple[int, ...]], tuple[float, bool]] = {}
        self.choice: dict[tuple[int, tuple[int, ...]], tuple[dict, tuple[int, ...]]] = {}
        self.final_memo: dict = {}
        self.final_choice: dict = {}
        self.incumbent: tuple[float, StagePlan] | None = None
        self.path: list[tuple[dict, int]] = []  # (stage plan, stage cost) above the current stage

    # -- bounds ---------------------------------------------------------------

    def _max_residue_bits(self) -> int:
        if self.rule != RAGGED_CPA:
            return TERNARY_N * self.width
        best = {0: 0}
        for _ in range(self.width):
            nxt: dict[int, int] = {}
            for carry, total in best.items():
                for n in range(RAGGED_N + 1):
                    if carry > RAGGED_C or n + carry > RAGGED_NC:
                        continue
                    nc = (carry + n) // 2
                    nxt[nc] = max(nxt.get(nc, -1), total + n)
            best = nxt
        return max(best.values())

    def _shrunk(self, h: tuple[int, ...], k: int) -> tuple[int, ...]:
        if not self.shrink_ok:
            return tuple(0 for _ in h)
        m = self.max_col_in
        for _ in range(k):
            h = tuple(-(-x // m) for x in h)
        return h

    def lower_bound(self, h: tuple[int, ...], k: int) -> float:
        """Admissible bound on the cost to finish ``h`` in ``k`` more stages."""
        if k == 0:
            return self.terminal(h)
        if not residue_ok(self._shrunk(h, k), self.rule):
            return INF
        excess = sum(h) - self.max_residue_bits
        if excess <= 0 or self.best_eff == 0:
            return 0
        return math.ceil(excess / self.best_eff)

    def terminal(self, h) -> float:
        if not residue_ok(h, self.rule):
            return INF
        lo = next((c for c, x in enumerate(h) if x >= 2 and c < self.result_width), None)
        return 0 if lo is None else ADDER_LE_PER_COLUMN * (self.result_width - lo)

    def tick(self) -> None:
        self.ticks += 1
        if self.ticks & 1023 == 0 and time.monotonic() > self.deadline:
            raise _Timeout

    # -- candidate filtering ----------------------------------------------------

    @lru_cache(maxsize=None)
    def candidates(self, anchor: int, window: tuple[int, ...]) -> tuple[_Cand, ...]:
        """Non-dominated placements at ``anchor`` given the deficits from there up."""
        live = []
        for cand in self.by_anchor[anchor]:
            eff = tuple(min(m, window[i]) for i, m in enumerate(cand.inputs))
            if any(eff):
                live.append((cand, eff))
        span = max((len(c.outputs) for c, _ in live), default=0)
        shaped = [
            (cand, _pad(eff, span), _pad(cand.outputs, span)) for cand, eff in live
        ]
        keep = []
        for i, (cand, eff, outs) in enumerate(shaped):
            for j, (other, oeff, oouts) in enumerate(shaped):
                if i == j or other.cost > cand.cost:
                    continue
                if all(a >= b for a, b in zip(oeff, eff)) and all(a <= b for a, b in zip(oouts, outs)):
                    tie = other.cost == cand.cost and oeff == eff and oouts == outs
                    if not tie or j < i:
                        break
            else:
                keep.append(cand)
        keep.sort(key=lambda c: (-(sum(c.inputs) - sum(c.outputs)) / max(c.cost, 1), c.t))
        return tuple(keep)

    def _multisets(self, anchor: int, deficit: list[int], out: list[int], cost: int, cap: float = INF):
        """Yield (extra cost, uses) after choosing placements anchored at ``anchor``.

        ``deficit`` and ``out`` are absolute-column lists updated in place and
        restored before each yield returns.  Branches that push more than
        ``cap`` bits into the anchor column are dropped.
        """
        window = tuple(deficit[anchor:])
        cands = self.candidates(anchor, window)
        chosen: list[tuple[int, int]] = []

        def rec(i: int, spent: int):
            if i == len(cands):
                yield spent, tuple(chosen)
                return
            cand = cands[i]
            span = range(len(cand.inputs))
            saved_def = [deficit[anchor + x] for x in span]
            n = 0
            # count 0 first, then add copies while each still covers a live bit
            yield from rec(i + 1, spent)
            while any(cand.inputs[x] and deficit[anchor + x] > 0 for x in span):
                self.tick()
                n += 1
                for x in span:
                    deficit[anchor + x] = max(0, deficit[anchor + x] - cand.inputs[x])
                for x, k in enumerate(cand.outputs):
                    out[anchor + x] += k
                if out[anchor] > cap:
                    break
                chosen.append((cand.t, n))
                yield from rec(i + 1, spent + cand.cost * n)
                chosen.pop()
            for x in span:
                deficit[anchor + x] = saved_def[x]
            for x, k in enumerate(cand.outputs):
                out[anchor + x] -= k * n

        yield from rec(0, cost)

    # -- final stage --------------------------------------------------------------

    def final_value(self, h: tuple[int, ...]) -> float:
        key = ("h", h)
        if key in self.final_memo:
            return self.final_memo[key]
        width = self.width
        val = self._final(0, h, (0,) * width, 0, False)
        self.final_memo[key] = val
        return val

    def _final(self, c: int, d: tuple[int, ...], o: tuple[int, ...], carry: int, started: bool) -> float:
        if c == self.width:
            return 0
        key = (c, d, o, carry, started)
        hit = self.final_memo.get(key)
        if hit is not None:
            return hit
        deficit = [0] * c + list(d)
        out = [0] * c + list(o)
        best = INF
        best_uses = None
        if self.rule == RAGGED_CPA:
            if carry > RAGGED_C:
                return INF
            cap = min(RAGGED_N, RAGGED_NC - carry)
        else:
            cap = TERNARY_N
        if out[c] > cap:
            self.final_memo[key] = INF
            return INF
        for extra, uses in self._multisets(c, deficit, out, 0, cap):
            height = out[c] + deficit[c]
            if self.rule == RAGGED_CPA:
                if height > RAGGED_N or carry > RAGGED_C or height + carry > RAGGED_NC:
                    continue
                ncarry = (carry + height) // 2
            else:
                if height > TERNARY_N:
                    continue
                ncarry = 0
            add = 0
            nstarted = started
            if not started and height >= 2 and c < self.result_width:
                add = ADDER_LE_PER_COLUMN * (self.result_width - c)
                nstarted = True
            if extra + add >= best:
                continue
            rest = self._final(c + 1, tuple(deficit[c + 1 :]), tuple(out[c + 1 :]), ncarry, nstarted)
            total = extra + add + rest
            if total < best:
                best = total
                best_uses = uses
        self.final_memo[key] = best
        self.final_choice[key] = best_uses
        return best

    def final_plan(self, h: tuple[int, ...]) -> dict[tuple[int, int], int]:
        plan: dict[tuple[int, int], int] = {}
        d, o, carry, started = h, (0,) * self.width, 0, False
        for c in range(self.width):
            uses = self.final_choice[(c, d, o, carry, started)]
            deficit = [0] * c + list(d)
            out = [0] * c + list(o)
            for t, n in uses:
                g = self.model.gpcs[t]
                plan[(t, c)] = n
                for i, m in enumerate(g.inputs[: self.width - c]):
                    deficit[c + i] = max(0, deficit[c + i] - m * n)
                for j, k in enumerate(g.outputs):
                    out[c + j] += k * n
            height = out[c] + deficit[c]
            carry = (carry + height) // 2 if self.rule == RAGGED_CPA else 0
            if not started and height >= 2 and c < self.result_width:
                started = True
            d, o = tuple(deficit[c + 1 :]), tuple(out[c + 1 :])
        return plan

    # -- intermediate stages ----------------------------------------------------------

    def solve_from(self, s: int, h: tuple[int, ...], budget: float) -> tuple[float, bool]:
        """Cost to finish from heap ``h`` entering stage ``s``.

        Returns ``(value, True)`` when exact, or ``(bound, False)`` with
        ``bound > budget`` when the subtree was cut off.
        """
        k = self.model.stages - s
        if k == 0:
            return self.terminal(h), True
        if k == 1:
            return self.final_value(h), True
        key = (s, h)
        hit = self.memo.get(key)
        if hit is not None:
            val, exact = hit
            if exact or val > budget:
                return hit
        lb0 = self.lower_bound(h, k)
        if lb0 > budget:
            self.memo[key] = (lb0, False)
            return lb0, False

        width = self.width
        deficit = list(h)
        out = [0] * width
        best = INF
        best_choice = None
        cut_bound = INF
        seen: dict[tuple[int, ...], float] = {}
        plan: dict[tuple[int, int], int] = {}

        def sweep(c: int, spent: int):
            nonlocal best, best_choice, cut_bound
            if c == width:
                nxt = tuple(out)
                if seen.get(nxt, INF) <= spent:
                    return
                seen[nxt] = spent
                limit = min(budget, best - 1) - spent
                self.path.append((plan, spent))
                try:
                    val, exact = self.solve_from(s + 1, nxt, limit)
                finally:
                    self.path.pop()
                if exact and val < INF:
                    self._offer(s, spent + val, plan, nxt)
                if exact and val <= limit:
                    best = spent + val
                    best_choice = (dict(plan), nxt)
                else:
                    cut_bound = min(cut_bound, spent + val)
                return
            for extra, uses in self._multisets(c, deficit, out, spent):
                lb_heap = list(out)
                lb_heap[c] += deficit[c]
                for x in range(c + 1, width):
                    if deficit[x] > 0:
                        lb_heap[x] += -(-deficit[x] // self.max_col_in)
                lb = extra + self.lower_bound(tuple(lb_heap), k - 1)
                if lb > min(budget, best - 1):
                    cut_bound = min(cut_bound, lb)
                    continue
                for t, n in uses:
                    plan[(t, c)] = n
                wires = deficit[c]
                out[c] += wires
                deficit[c] = 0
                sweep(c + 1, extra)
                deficit[c] = wires
                out[c] -= wires
                for t, n in uses:
                    del plan[(t, c)]

        sweep(0, 0)
        if best <= budget:
            self.memo[key] = (best, True)
            self.choice[key] = best_choice
            return best, True
        bound = min(best, cut_bound)
        if bound <= budget:
            bound = budget + 1
        self.memo[key] = (bound, False)
        return bound, False

    def _offer(self, s: int, tail_cost: float, plan: dict, nxt: tuple[int, ...]) -> None:
        """Keep the cheapest complete plan seen so far, for timeouts."""
        total = sum(spent for _, spent in self.path) + tail_cost
        if self.incumbent is not None and self.incumbent[0] <= total:
            return
        stages = [dict(p) for p, _ in self.path] + [dict(plan)] + self.tail(s + 1, nxt)
        self.incumbent = (total, stages)

    def tail(self, s: int, h: tuple[int, ...]) -> StagePlan:
        stages: StagePlan = []
        for s in range(s, self.model.stages):
            if self.model.stages - s == 1:
                stages.append(self.final_plan(h))
                break
            uses, h = self.choice[(s, h)]
            stages.append(uses)
        return stages

    def plan(self) -> StagePlan:
        return self.tail(0, tuple(self.model.heap[c] for c in range(self.width)))


def solve_builtin(model: IlpModel, time_budget: float = 300.0, max_bits: int | None = DEFAULT_MAX_BITS) -> SolveOutcome:
    """Solve ``model`` exactly; deterministic for equal inputs."""
    start = time.monotonic()
    if max_bits is not None and model.heap.total_bits > max_bits:
        raise ValueError(
            f"builtin solver is limited to {max_bits} input bits (heap has {model.heap.total_bits}); "
            "use an external solver or raise the limit"
        )
    search = _Search(model, start + time_budget)
    h = tuple(model.heap[c] for c in range(model.width))
    try:
        value, exact = search.solve_from(0, h, INF)
    except _Timeout:
        elapsed = time.monotonic() - start
        if search.incumbent is None:
            return SolveOutcome(UNKNOWN, wall_time=elapsed)
        values = assignment(model, search.incumbent[1])
        return SolveOutcome(FEASIBLE, values, int(model.objective_value(values)), elapsed)
    elapsed = time.monotonic() - start
    if value == INF:
        return SolveOutcome(INFEASIBLE, wall_time=elapsed)
    assert exact
    plan = search.plan() if model.stages else []
    values = assignment(model, plan)
    objective = model.objective_value(values)
    if objective != value:
        raise AssertionError(f"builtin search value {value} disagrees with decoded objective {objective}")
    return SolveOutcome(OPTIMAL, values, int(objective), elapsed)
