"""Greedy stage-by-stage compressor-tree construction.

Each stage repeatedly places the GPC whose metric is best on the bits still
uncovered in that stage; bits left over ride pseudo-wires into the next
stage.  Stages are added until the residue suits the final adder.
"""

from __future__ import annotations

from fractions import Fraction

from ..benchgen import Benchmark
from ..gpclib import PSEUDO_WIRE_GPC, ArchProfile, Gpc
from ..ilpmodel import column_count, residue_ok
from ..solution import Solution
from .common import SolverError
from .manager import build_solution

METRICS = ("efficiency", "strength", "product")
MAX_STAGES = 64


def _score(metric: str, live: int, g: Gpc) -> Fraction:
    eff = Fraction(live - g.q, g.cost)
    if metric == "efficiency":
        return eff
    strength = Fraction(live, g.q)
    if metric == "strength":
        return strength
    return eff * strength


def _best(metric: str, heap: list[int], gpcs: list[Gpc], width: int):
    best_key, best = None, None
    for g in gpcs:
        for a in range(width - g.out_width + 1):
            live = sum(min(m, heap[a + i]) for i, m in enumerate(g.inputs) if a + i < width)
            if live <= g.q:
                continue  # must strictly reduce the bit count
            key = (_score(metric, live, g), g.p, _neg_name(g.name), -a)
            if best_key is None or key > best_key:
                best_key, best = key, (g, a)
    return best


def _neg_name(name: str) -> tuple[int, ...]:
    # lexicographically smaller names rank higher under max()
    return tuple(-ord(ch) for ch in name) + (1,)


def heuristic_synthesize(benchmark: Benchmark, profile: ArchProfile, metric: str = "efficiency") -> Solution:
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {', '.join(METRICS)}")
    width = column_count(benchmark.heap)
    heap = list(benchmark.heap.normalized().padded(width))
    gpcs = [g for g in profile.gpcs if not g.is_wire]
    plan: list[dict[tuple[str, int], int]] = []
    while not residue_ok(heap, profile.final_rule):
        if len(plan) == MAX_STAGES:
            raise SolverError(f"heuristic did not converge within {MAX_STAGES} stages")
        left = list(heap)
        nxt = [0] * width
        uses: dict[tuple[str, int], int] = {}
        while (pick := _best(metric, left, gpcs, width)) is not None:
            g, a = pick
            for i, m in enumerate(g.inputs):
                if a + i < width:
                    left[a + i] -= min(m, left[a + i])
            for j, k in enumerate(g.outputs):
                nxt[a + j] += k
            uses[(g.name, a)] = uses.get((g.name, a), 0) + 1
        if not uses:
            raise SolverError(f"heuristic stuck on heap {heap}")
        for c, n in enumerate(left):
            if n:
                uses[(PSEUDO_WIRE_GPC.name, c)] = n
        heap = [n + x for n, x in zip(nxt, left)]
        plan.append(uses)
    return build_solution(benchmark, profile, plan, "heuristic", f"heuristic/{metric}")
