"""Micro-benchmark bit heaps, including primary-stage fusion.

Two benchmark families have a primary stage that runs before the
compressor tree:

* ``MAC3x<N>`` (and its ``FIR3`` alias): partial products of equal rank are
  grouped in threes and each triple feeds a fused AND/full-adder unit.
* ``BNN<shape>``: XNOR pairs are grouped in threes and each triple feeds a
  fused XnorPopcount unit producing a sum and a carry bit.

Every benchmark can draw random primary inputs, expand them into the
concrete post-primary heap bits and compute the exact expected result, so
the verifier can simulate end to end.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass
from typing import Any

from .bitheap import MAX_BITS, BitHeap
from .gpclib import ArchProfile

PLAIN = "plain"
MAC3 = "mac3"
BNN = "bnn"

MAC_UNIT_LES = 2
BNN_LEFTOVER_LES = 1


class BenchmarkError(ValueError):
    pass


@dataclass(frozen=True)
class Benchmark:
    name: str
    heap: BitHeap
    kind: str = PLAIN
    size: int = 0
    primary_units: int = 0
    leftover_pairs: int = 0
    primary_desc: str = ""

    @property
    def primary_cost_baseline(self) -> int:
        return self.primary_cost(2)

    @property
    def primary_cost_luxor(self) -> int:
        return self.primary_cost(1)

    def primary_cost(self, profile: ArchProfile | int) -> int:
        """LEs spent before the tree; BNN fused units cost the profile's fusion rate."""
        if self.kind == MAC3:
            return MAC_UNIT_LES * self.primary_units
        if self.kind == BNN:
            rate = profile if isinstance(profile, int) else profile.primary_fusion
            return rate * self.primary_units + BNN_LEFTOVER_LES * self.leftover_pairs
        return 0

    # -- simulation hooks ------------------------------------------------------

    def random_inputs(self, rng: random.Random) -> Any:
        if self.kind == MAC3:
            top = (1 << self.size) - 1
            return [(rng.randint(0, top), rng.randint(0, top)) for _ in range(3)]
        if self.kind == BNN:
            return [(rng.getrandbits(1), rng.getrandbits(1)) for _ in range(self.size)]
        return [[rng.getrandbits(1) for _ in range(h)] for h in self.heap]

    @property
    def input_bits(self) -> int:
        """Number of primary input bits (bounds exhaustive simulation)."""
        if self.kind == MAC3:
            return 6 * self.size
        if self.kind == BNN:
            return 2 * self.size
        return self.heap.total_bits

    def decode_inputs(self, x: int) -> Any:
        """Primary inputs whose bits, in a fixed order, spell the integer ``x``."""
        if self.kind == MAC3:
            n, mask = self.size, (1 << self.size) - 1
            return [((x >> (2 * i * n)) & mask, (x >> ((2 * i + 1) * n)) & mask) for i in range(3)]
        if self.kind == BNN:
            return [((x >> (2 * i)) & 1, (x >> (2 * i + 1)) & 1) for i in range(self.size)]
        out, pos = [], 0
        for h in self.heap:
            out.append([(x >> (pos + k)) & 1 for k in range(h)])
            pos += h
        return out

    def all_ones(self) -> Any:
        if self.kind == MAC3:
            top = (1 << self.size) - 1
            return [(top, top)] * 3
        if self.kind == BNN:
            return [(1, 1)] * self.size
        return [[1] * h for h in self.heap]

    def all_zeros(self) -> Any:
        if self.kind == MAC3:
            return [(0, 0)] * 3
        if self.kind == BNN:
            return [(1, 0)] * self.size
        return [[0] * h for h in self.heap]

    def reference(self, inputs: Any) -> int:
        """Exact result the whole circuit must produce."""
        if self.kind == MAC3:
            return sum(a * b for a, b in inputs)
        if self.kind == BNN:
            return sum(1 for w, x in inputs if w == x)
        return sum(sum(bits) << c for c, bits in enumerate(inputs))

    def expand(self, inputs: Any) -> list[list[int]]:
        """Concrete post-primary heap bits for the given primary inputs."""
        if self.kind == MAC3:
            return _mac3_expand(self.size, inputs, len(self.heap))
        if self.kind == BNN:
            return _bnn_expand(inputs)
        return [list(bits) for bits in inputs]


# -- raw heaps and fusion ------------------------------------------------------


def mac3_raw(n: int) -> list[int]:
    """Partial-product heights of three n-by-n products, before fusion."""
    return [3 * (min(c, n - 1) - max(0, c - n + 1) + 1) for c in range(2 * n - 1)]


def fuse_triples(raw: list[int]) -> tuple[list[int], int]:
    """Replace same-rank triples by full-adder units; returns heap and unit count."""
    out = [0] * (len(raw) + 1)
    units = 0
    for c, h in enumerate(raw):
        f, rest = divmod(h, 3)
        units += f
        out[c] += f + rest
        out[c + 1] += f
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return out, units


def _mac3_bits(n: int, inputs) -> list[list[int]]:
    cols: list[list[int]] = [[] for _ in range(2 * n - 1)]
    for a, b in inputs:
        for i in range(n):
            for j in range(n):
                cols[i + j].append((a >> i) & (b >> j) & 1)
    return cols


def _mac3_expand(n: int, inputs, width: int) -> list[list[int]]:
    raw = _mac3_bits(n, inputs)
    out: list[list[int]] = [[] for _ in range(max(width, len(raw) + 1))]
    sums: list[list[int]] = [[] for _ in out]
    carries: list[list[int]] = [[] for _ in out]
    for c, bits in enumerate(raw):
        f = len(bits) // 3
        for u in range(f):
            x, y, z = bits[3 * u : 3 * u + 3]
            total = x + y + z
            sums[c].append(total & 1)
            carries[c + 1].append(total >> 1)
        sums[c].extend(bits[3 * f :])
    for c in range(len(out)):
        out[c] = sums[c] + carries[c]
    return out[:width]


def xnor_unit(w: tuple[int, int, int], x: tuple[int, int, int]) -> tuple[int, int]:
    """Sum and carry of three XNOR products, written the way the LUTs compute them."""
    p = [1 - (wi ^ xi) for wi, xi in zip(w, x)]
    s = p[0] ^ p[1] ^ p[2]
    carry = (p[0] & p[1]) | (p[2] & (p[0] ^ p[1]))
    return s, carry


def _bnn_expand(inputs) -> list[list[int]]:
    full = len(inputs) // 3
    sums, carries = [], []
    for u in range(full):
        chunk = inputs[3 * u : 3 * u + 3]
        s, c = xnor_unit(tuple(w for w, _ in chunk), tuple(x for _, x in chunk))
        sums.append(s)
        carries.append(c)
    for w, x in inputs[3 * full :]:
        sums.append(1 - (w ^ x))
    return [sums, carries] if carries else [sums]


# -- generators ------------------------------------------------------------------


def _check(n: int, lo: int, hi: int = MAX_BITS, what: str = "n") -> None:
    if not lo <= n <= hi:
        raise BenchmarkError(f"{what}={n} out of range [{lo}, {hi}]")


def popcount(n: int) -> Benchmark:
    _check(n, 1)
    return Benchmark(f"S{n}", BitHeap([n]), size=n)


def double_popcount(n: int) -> Benchmark:
    _check(n, 1, MAX_BITS // 2)
    return Benchmark(f"D{n}", BitHeap([n, n]), size=n)


def multi_add(k: int, b: int) -> Benchmark:
    _check(k, 1, what="k")
    _check(b, 1, what="b")
    _check(k * b, 1, what="k*b")
    return Benchmark(f"ADD{k}x{b}", BitHeap([k] * b), size=k)


def mac3(n: int, name: str | None = None) -> Benchmark:
    _check(n, 1, 36)
    heap, units = fuse_triples(mac3_raw(n))
    return Benchmark(
        name or f"MAC3x{n}",
        BitHeap(heap),
        MAC3,
        n,
        units,
        0,
        f"{units} fused AND/full-adder units over same-rank partial-product triples",
    )


def fir3(n: int) -> Benchmark:
    """FIR-3 stand-in: the heap of a 3-term multiply-accumulate (approximation)."""
    b = mac3(n, f"FIR3x{n}")
    return Benchmark(b.name, b.heap, b.kind, b.size, b.primary_units, b.leftover_pairs,
                     b.primary_desc + " (FIR-3 approximated by 3-MAC)")


def bnn_xnorpopcount(n: int, name: str | None = None) -> Benchmark:
    _check(n, 3, 3 * MAX_BITS // 2, what="pairs")
    full, rest = divmod(n, 3)
    heap = [full + rest, full] if full else [rest]
    desc = f"{full} fused XnorPopcount units"
    if rest:
        desc += f" + {rest} single XNOR pair(s)"
    return Benchmark(name or f"BNN{n}", BitHeap(heap), BNN, n, full, rest, desc)


_SPEC = re.compile(r"^(?P<kind>[A-Za-z0-9]+):(?P<arg>.*)$")


def parse_spec(spec: str) -> Benchmark:
    """Parse ``S:128``, ``D:256``, ``ADD:6x7``, ``MAC3:8``, ``FIR3:8``,
    ``BNN:3x3x256`` or ``HEAP:0,6,0,6``."""
    m = _SPEC.match(spec.strip())
    if not m:
        raise BenchmarkError(f"bad benchmark spec {spec!r}")
    kind, arg = m["kind"].upper(), m["arg"].strip()
    try:
        if kind == "HEAP":
            heap = BitHeap.parse(arg)
            return Benchmark(f"HEAP{heap.literal() or '0'}", heap, size=heap.total_bits)
        if kind == "S":
            return popcount(int(arg))
        if kind == "D":
            return double_popcount(int(arg))
        if kind == "ADD":
            k, b = (int(x) for x in arg.lower().split("x"))
            return multi_add(k, b)
        if kind == "MAC3":
            return mac3(int(arg))
        if kind == "FIR3":
            return fir3(int(arg))
        if kind == "BNN":
            dims = [int(x) for x in arg.lower().split("x")]
            if not dims or any(d < 1 for d in dims):
                raise BenchmarkError(f"bad BNN shape {arg!r}")
            return bnn_xnorpopcount(math.prod(dims), f"BNN{'x'.join(map(str, dims))}")
    except (ValueError, TypeError) as exc:
        if isinstance(exc, BenchmarkError):
            raise
        raise BenchmarkError(f"bad benchmark spec {spec!r}: {exc}") from None
    raise BenchmarkError(f"unknown benchmark kind {kind!r} in {spec!r}")
