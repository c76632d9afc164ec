"""Synthesized compressor trees and their JSON form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

from .bitheap import BitHeap
from .gpclib import ArchProfile, Gpc
from .ilpmodel import adder_span, column_count


@dataclass(frozen=True, order=True)
class Use:
    """``count`` copies of a GPC anchored at ``anchor`` in one stage."""

    anchor: int
    gpc: str
    count: int = 1


@dataclass(frozen=True)
class FinalAdder:
    lo: int
    hi: int
    cost: int


@dataclass
class Solution:
    benchmark: str
    profile: str
    heap: BitHeap
    stages: list[tuple[Use, ...]]
    primary_cost: int = 0
    compression_cost: int = 0
    final_adder: FinalAdder | None = None
    status: str = "optimal"
    method: str = "ilp"
    extra: dict = field(default_factory=dict)
    heights: list[tuple[int, ...]] | None = None  # declared heap entering each stage, then the residue

    @property
    def stage_count(self) -> int:
        return len(self.stages)

    @property
    def adder_cost(self) -> int:
        return self.final_adder.cost if self.final_adder else 0

    @property
    def total_cost(self) -> int:
        return self.primary_cost + self.compression_cost + self.adder_cost

    @property
    def width(self) -> int:
        return column_count(self.heap)

    def heaps(self, profile: ArchProfile) -> list[tuple[int, ...]]:
        """Heap entering every stage plus the residue (``stage_count + 1`` entries)."""
        width = self.width
        out = [tuple(self.heap.normalized().padded(width))]
        for uses in self.stages:
            nxt = [0] * width
            for u in uses:
                g = profile.gpc(u.gpc)
                for j, k in enumerate(g.outputs):
                    if u.anchor + j >= width:
                        raise ValueError(f"{u.gpc} at column {u.anchor} writes past column {width - 1}")
                    nxt[u.anchor + j] += k * u.count
            out.append(tuple(nxt))
        return out

    def usage(self) -> dict[str, int]:
        """GPC name -> number of instances (pseudo-wires excluded)."""
        hist: dict[str, int] = {}
        for uses in self.stages:
            for u in uses:
                if u.gpc != "C1:1":
                    hist[u.gpc] = hist.get(u.gpc, 0) + u.count
        return dict(sorted(hist.items()))

    def to_dict(self) -> dict:
        return {
            "benchmark": self.benchmark,
            "profile": self.profile,
            "heap": self.heap.literal(),
            "status": self.status,
            "method": self.method,
            "stage_count": self.stage_count,
            "cost": {
                "primary": self.primary_cost,
                "compression": self.compression_cost,
                "final_adder": self.adder_cost,
                "total": self.total_cost,
            },
            "final_adder": None
            if self.final_adder is None
            else {"lo": self.final_adder.lo, "hi": self.final_adder.hi, "cost": self.final_adder.cost},
            "stages": [
                [{"gpc": u.gpc, "anchor": u.anchor, "count": u.count} for u in uses] for uses in self.stages
            ],
            "heights": None if self.heights is None else [_literal(h) for h in self.heights],
            **({"extra": self.extra} if self.extra else {}),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Solution":
        adder = data.get("final_adder")
        cost = data["cost"]
        return cls(
            benchmark=data["benchmark"],
            profile=data["profile"],
            heap=BitHeap.parse(data["heap"]),
            stages=[
                tuple(Use(int(u["anchor"]), u["gpc"], int(u["count"])) for u in uses) for uses in data["stages"]
            ],
            primary_cost=int(cost["primary"]),
            compression_cost=int(cost["compression"]),
            final_adder=None if adder is None else FinalAdder(int(adder["lo"]), int(adder["hi"]), int(adder["cost"])),
            status=data.get("status", "optimal"),
            method=data.get("method", "ilp"),
            extra=data.get("extra", {}),
            heights=None if data.get("heights") is None else [_parse_literal(h) for h in data["heights"]],
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"


def _literal(h: Sequence[int]) -> str:
    return ",".join(str(x) for x in reversed(h))


def _parse_literal(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in reversed(text.split(",")))


def stage_cost(uses: Sequence[Use], profile: ArchProfile) -> int:
    return sum(profile.gpc(u.gpc).cost * u.count for u in uses)


def make_final_adder(residue: Sequence[int], result_width: int, le_per_column: int = 1) -> FinalAdder | None:
    span = adder_span(residue, result_width)
    if span is None:
        return None
    lo, hi = span
    return FinalAdder(lo, hi, le_per_column * (hi - lo + 1))


def normalize_uses(pairs: dict[tuple[int, str], int]) -> tuple[Use, ...]:
    return tuple(sorted(Use(a, g, n) for (a, g), n in pairs.items() if n > 0))


def gpc_index(profile: ArchProfile) -> dict[str, Gpc]:
    return {g.name: g for g in profile.gpcs}
