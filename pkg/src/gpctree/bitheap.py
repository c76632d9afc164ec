"""Bit heaps in dot notation.

A bit heap is a list of column heights; column ``c`` holds bits of weight
``2**c``.  Heights are stored least-significant column first, while textual
literals (``"0,6,0,6"``) are written most-significant first, the same way
GPC tuples are written.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

MAX_BITS = 4096


class HeapError(ValueError):
    pass


@dataclass(frozen=True)
class BitHeap:
    columns: tuple[int, ...]

    def __init__(self, columns: Iterable[int] = ()):
        cols = tuple(int(h) for h in columns)
        if any(h < 0 for h in cols):
            raise HeapError(f"negative column height in {cols}")
        if sum(cols) > MAX_BITS:
            raise HeapError(f"heap holds {sum(cols)} bits; the limit is {MAX_BITS}")
        object.__setattr__(self, "columns", cols)

    @classmethod
    def parse(cls, text: str) -> "BitHeap":
        """Parse a most-significant-first literal such as ``"0,6,0,6"``."""
        text = text.strip()
        if not text:
            return cls(())
        try:
            heights = [int(tok) for tok in text.split(",")]
        except ValueError as exc:
            raise HeapError(f"bad heap literal {text!r}") from exc
        return cls(reversed(heights))

    def literal(self) -> str:
        return ",".join(str(h) for h in reversed(self.columns))

    def __len__(self) -> int:
        return len(self.columns)

    def __getitem__(self, c: int) -> int:
        return self.columns[c] if 0 <= c < len(self.columns) else 0

    def __iter__(self):
        return iter(self.columns)

    @property
    def total_bits(self) -> int:
        return sum(self.columns)

    def normalized(self) -> "BitHeap":
        cols = list(self.columns)
        while cols and cols[-1] == 0:
            cols.pop()
        return BitHeap(cols)

    def padded(self, width: int) -> "BitHeap":
        if width < len(self.columns):
            raise HeapError(f"cannot pad a {len(self.columns)}-column heap to {width}")
        return BitHeap(self.columns + (0,) * (width - len(self.columns)))

    def __add__(self, other: "BitHeap") -> "BitHeap":
        width = max(len(self), len(other))
        return BitHeap(self[c] + other[c] for c in range(width))


def max_value(heap: BitHeap | Sequence[int]) -> int:
    """Largest value the heap can represent (every bit set)."""
    return sum(h << c for c, h in enumerate(heap))


def value(assignment: Sequence[Sequence[bool | int]], heap: BitHeap | None = None) -> int:
    """Weighted popcount of a per-column bit assignment."""
    if heap is not None:
        if len(assignment) != len(heap) or any(
            len(bits) != h for bits, h in zip(assignment, heap)
        ):
            raise HeapError("assignment does not match heap shape")
    return sum(sum(1 for b in bits if b) << c for c, bits in enumerate(assignment))


def render_dots(heap: BitHeap | Sequence[int], dot: str = "o", empty: str = ".") -> str:
    """Render a heap as a bottom-aligned dot grid, most-significant column left."""
    cols = list(heap)
    if not cols:
        return ""
    rows = max(max(cols), 1)
    lines = []
    for r in range(rows, 0, -1):
        lines.append(" ".join(dot if h >= r else empty for h in reversed(cols)))
    return "\n".join(lines)
