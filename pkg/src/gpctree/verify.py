"""Independent checks of GPCs, solutions and the XnorPopcount rewrite.

Nothing here trusts the solver: structure is recomputed from the stored
placements, and functional checks push concrete bits through every GPC and
compare against the weighted-sum reference of the benchmark.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field, replace

from .benchgen import Benchmark, xnor_unit
from .gpclib import ArchProfile, Gpc, slack
from .ilpmodel import RAGGED_C, RAGGED_N, RAGGED_NC, TERNARY_N, carries, column_count
from .gpclib import RAGGED_CPA
from .solution import Solution, Use, make_final_adder, stage_cost

EXHAUSTIVE_GPC_INPUTS = 20
EXHAUSTIVE_SIM_BITS = 16
GPC_SAMPLES = 100_000
SIM_SAMPLES = 1000
BATCH = 1000


# -- GPC semantics -----------------------------------------------------------------


@dataclass(frozen=True)
class GpcCheck:
    gpc: str
    ok: bool
    cases: int
    exhaustive: bool
    detail: str = ""


def _gpc_output_value(g: Gpc, count: int) -> int:
    per_col = g.encode(count)
    for j, (n, k) in enumerate(zip(per_col, g.outputs)):
        if not 0 <= n <= k:
            raise AssertionError(f"column {j} emits {n} of {k} bits")
    return sum(n << j for j, n in enumerate(per_col))


def check_gpc_semantics(g: Gpc, mode: str = "auto", samples: int = GPC_SAMPLES, seed: int = 0) -> GpcCheck:
    """Every input assignment must come out as its weighted count."""
    if slack(g) < 0:
        return GpcCheck(g.name, False, 0, False, "negative arithmetic slack")
    exhaustive = mode == "exhaustive" or (mode == "auto" and g.p <= EXHAUSTIVE_GPC_INPUTS)
    if exhaustive and g.p > EXHAUSTIVE_GPC_INPUTS:
        raise ValueError(f"{g.name}: {g.p} inputs is too many for exhaustive checking")
    # bit i of an assignment feeds column col_of[i]
    col_of = [c for c, m in enumerate(g.inputs) for _ in range(m)]
    if exhaustive:
        cases = range(1 << g.p)
    else:
        rng = random.Random(f"gpc:{g.name}:{seed}")
        cases = (rng.getrandbits(g.p) for _ in range(samples))
    cache: dict[int, int] = {}
    n = 0
    for x in cases:
        n += 1
        weighted = 0
        for i, c in enumerate(col_of):
            if x >> i & 1:
                weighted += 1 << c
        got = cache.get(weighted)
        if got is None:
            try:
                got = cache[weighted] = _gpc_output_value(g, weighted)
            except (ValueError, AssertionError) as exc:
                return GpcCheck(g.name, False, n, exhaustive, f"input {x:#x}: {exc}")
        if got != weighted:
            return GpcCheck(g.name, False, n, exhaustive, f"input {x:#x}: expected {weighted}, got {got}")
    return GpcCheck(g.name, True, n, exhaustive)


# -- structure ---------------------------------------------------------------------------


@dataclass
class StructuralReport:
    ok: bool
    diagnostics: list[str] = field(default_factory=list)


def _first_rule_violation(residue, rule: str) -> int | None:
    cs = carries(residue)
    for c, (n, k) in enumerate(zip(residue, cs)):
        if rule == RAGGED_CPA:
            if n > RAGGED_N or k > RAGGED_C or n + k > RAGGED_NC:
                return c
        elif n > TERNARY_N:
            return c
    return None


def validate_structure(solution: Solution, benchmark: Benchmark, profile: ArchProfile) -> StructuralReport:
    diag: list[str] = []
    if solution.profile != profile.name:
        diag.append(f"profile mismatch: solution targets {solution.profile}, checking against {profile.name}")
    if solution.heap.normalized() != benchmark.heap.normalized():
        diag.append(f"heap mismatch: solution {solution.heap.literal()} vs benchmark {benchmark.heap.literal()}")
        return StructuralReport(False, diag)

    width = column_count(benchmark.heap)
    h = list(benchmark.heap.normalized().padded(width))
    computed = [tuple(h)]
    for s, uses in enumerate(solution.stages, 1):
        cap = [0] * width
        nxt = [0] * width
        for u in uses:
            if u.gpc not in profile:
                diag.append(f"unknown GPC {u.gpc} in stage {s}")
                continue
            g = profile.gpc(u.gpc)
            if u.count < 1:
                diag.append(f"non-positive count {u.count} for {u.gpc} at ({s}, {u.anchor})")
            if u.anchor < 0 or u.anchor + g.out_width > width:
                diag.append(f"{u.gpc} at ({s}, {u.anchor}) outside columns 0..{width - 1}")
                continue
            for i, m in enumerate(g.inputs):
                if u.anchor + i < width:
                    cap[u.anchor + i] += m * u.count
            for j, k in enumerate(g.outputs):
                nxt[u.anchor + j] += k * u.count
        for c in range(width):
            if cap[c] < h[c]:
                diag.append(f"uncovered bit ({s}, {c})")
        h = nxt
        computed.append(tuple(h))

    if solution.heights is not None:
        declared = [tuple(x) + (0,) * (width - len(x)) for x in solution.heights]
        if len(declared) != len(computed):
            diag.append(f"height mismatch: {len(declared)} declared heaps for {len(computed)} stages")
        for s, (d, c) in enumerate(zip(declared, computed)):
            for col in range(width):
                if d[col] != c[col]:
                    diag.append(f"height mismatch ({s}, {col}): declared {d[col]}, produced {c[col]}")
                    break

    bad = _first_rule_violation(h, profile.final_rule)
    if bad is not None:
        diag.append(f"final rule {profile.final_rule} violated ({len(solution.stages)}, {bad})")

    try:
        compression = sum(stage_cost(uses, profile) for uses in solution.stages)
    except Exception:
        compression = None
    if compression is not None and compression != solution.compression_cost:
        diag.append(f"cost mismatch: compression declared {solution.compression_cost}, placements imply {compression}")
    adder = make_final_adder(h, column_count(benchmark.heap) - 1)
    adder_cost = adder.cost if adder else 0
    if adder_cost != solution.adder_cost or adder != solution.final_adder:
        diag.append(f"cost mismatch: final adder declared {solution.adder_cost}, residue implies {adder_cost}")
    primary = benchmark.primary_cost(profile)
    if primary != solution.primary_cost:
        diag.append(f"cost mismatch: primary declared {solution.primary_cost}, benchmark implies {primary}")
    return StructuralReport(not diag, diag)


# -- simulation ---------------------------------------------------------------------


@dataclass
class SimResult:
    ok: bool
    expected: int
    got: int
    first_bad_stage: int | None = None
    detail: str = ""


def _weighted(cols) -> int:
    return sum(sum(bits) << c for c, bits in enumerate(cols))


class _Circuit:
    """A solution with its GPCs looked up once, ready to evaluate many vectors."""

    def __init__(self, solution: Solution, benchmark: Benchmark, profile: ArchProfile):
        self.benchmark = benchmark
        self.width = column_count(benchmark.heap)
        self.shape = list(benchmark.heap.normalized().padded(self.width))
        self.stages = []
        for uses in solution.stages:
            placed = []
            for u in uses:
                g = profile.gpc(u.gpc)
                placed.append((u.anchor, g.inputs, g.outputs, u.count, self._outputs(g)))
            self.stages.append(placed)

    @staticmethod
    def _outputs(g: Gpc):
        table: dict[int, list[list[int]]] = {}

        def emit(count: int) -> list[list[int]]:
            bits = table.get(count)
            if bits is None:
                per_col = g.encode(count)
                bits = table[count] = [[1] * n + [0] * (k - n) for n, k in zip(per_col, g.outputs)]
            return bits

        return emit

    def run(self, inputs) -> SimResult:
        expected = self.benchmark.reference(inputs)
        width = self.width
        cols = [list(b) for b in self.benchmark.expand(inputs)]
        if any(cols[width:]):
            return SimResult(False, expected, _weighted(cols), 0, "primary stage wrote above the top column")
        cols = cols[:width] + [[] for _ in range(width - len(cols))]
        if [len(b) for b in cols] != self.shape:
            return SimResult(False, expected, _weighted(cols), 0, "primary stage produced a different heap shape")
        if _weighted(cols) != expected:
            return SimResult(False, expected, _weighted(cols), 0, "primary stage changed the value")
        for s, placed in enumerate(self.stages, 1):
            nxt: list[list[int]] = [[] for _ in range(width)]
            for anchor, ins, outs, copies, emit in placed:
                for _ in range(copies):
                    count = 0
                    for i, m in enumerate(ins):
                        if anchor + i < width:
                            col = cols[anchor + i]
                            count += sum(col[:m]) << i  # short columns read as zero padding
                            del col[:m]
                    for j, bits in enumerate(emit(count)):
                        nxt[anchor + j].extend(bits)
            left = sum(len(b) for b in cols)
            cols = nxt
            got = _weighted(cols)
            if left:
                return SimResult(False, expected, got, s, f"{left} bit(s) dropped in stage {s}")
            if got != expected:
                return SimResult(False, expected, got, s, f"value changed in stage {s}")
        got = _weighted(cols)  # the final adder is exact addition of the residue
        if got >> (width - 1):
            return SimResult(False, expected, got, len(self.stages), "result overflows the adder width")
        return SimResult(got == expected, expected, got, None if got == expected else len(self.stages))


def simulate(solution: Solution, benchmark: Benchmark, profile: ArchProfile, inputs=None, seed: int = 0) -> SimResult:
    """Push one concrete input vector through the primary stage and every GPC."""
    if inputs is None:
        inputs = benchmark.random_inputs(random.Random(seed))
    return _Circuit(solution, benchmark, profile).run(inputs)


@dataclass
class FunctionalReport:
    ok: bool
    samples: int
    mismatches: int
    exhaustive: bool
    first_failure: SimResult | None = None


def functional_check(
    solution: Solution,
    benchmark: Benchmark,
    profile: ArchProfile,
    samples: int = SIM_SAMPLES,
    seed: int = 0,
    exhaustive: bool | None = None,
) -> FunctionalReport:
    """Exhaustive when the input is small enough, else seeded random batches."""
    if exhaustive is None:
        exhaustive = benchmark.input_bits <= EXHAUSTIVE_SIM_BITS
    if exhaustive:
        vectors = (benchmark.decode_inputs(x) for x in range(1 << benchmark.input_bits))
    else:

        def sampled():
            yield benchmark.all_zeros()
            yield benchmark.all_ones()
            for start in range(0, max(samples - 2, 0), BATCH):
                rng = random.Random(f"{seed}:{start // BATCH}")
                for _ in range(min(BATCH, samples - 2 - start)):
                    yield benchmark.random_inputs(rng)

        vectors = sampled()
    circuit = _Circuit(solution, benchmark, profile)
    n = bad = 0
    first = None
    for vec in vectors:
        n += 1
        r = circuit.run(vec)
        if not r.ok:
            bad += 1
            first = first or r
    return FunctionalReport(bad == 0, n, bad, exhaustive, first)


@dataclass
class ValidationReport:
    structural: StructuralReport
    functional: FunctionalReport | None

    @property
    def ok(self) -> bool:
        return self.structural.ok and self.functional is not None and self.functional.ok

    def to_dict(self) -> dict:
        f = self.functional
        return {
            "ok": self.ok,
            "structural": {"ok": self.structural.ok, "diagnostics": list(self.structural.diagnostics)},
            "functional": None
            if f is None
            else {
                "ok": f.ok,
                "samples": f.samples,
                "mismatches": f.mismatches,
                "exhaustive": f.exhaustive,
                "first_failure": None
                if f.first_failure is None
                else {
                    "stage": f.first_failure.first_bad_stage,
                    "expected": f.first_failure.expected,
                    "got": f.first_failure.got,
                    "detail": f.first_failure.detail,
                },
            },
        }


def validate(
    solution: Solution,
    benchmark: Benchmark,
    profile: ArchProfile,
    samples: int = SIM_SAMPLES,
    seed: int = 0,
    exhaustive: bool | None = None,
) -> ValidationReport:
    structural = validate_structure(solution, benchmark, profile)
    if not structural.ok:
        return ValidationReport(structural, None)
    return ValidationReport(structural, functional_check(solution, benchmark, profile, samples, seed, exhaustive))


# -- XnorPopcount rewrite -------------------------------------------------------------


@dataclass(frozen=True)
class IdentityReport:
    cases: int
    mismatches: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]

    @property
    def ok(self) -> bool:
        return not self.mismatches


def xnorpopcount_identity() -> IdentityReport:
    """Arithmetic XNOR count versus the XOR6-of-complemented-weights LUT form."""
    bad = []
    n = 0
    for bits in itertools.product((0, 1), repeat=6):
        n += 1
        w, x = bits[:3], bits[3:]
        ones = sum(1 for wi, xi in zip(w, x) if wi == xi)
        direct = (ones & 1, ones >> 1)
        nw = [1 - wi for wi in w]
        xor6 = nw[0] ^ nw[1] ^ nw[2] ^ x[0] ^ x[1] ^ x[2]
        lut = xnor_unit(w, x)
        if direct != (xor6, lut[1]) or lut != direct:
            bad.append((w, x))
    return IdentityReport(n, tuple(bad))


# -- negative injection -------------------------------------------------------------------


def mutate(solution: Solution, profile: ArchProfile, rng: random.Random) -> tuple[Solution, str]:
    """Change the anchor or the GPC of one placement; declared costs are kept."""
    slots = [(s, i) for s, uses in enumerate(solution.stages) for i in range(len(uses))]
    if not slots:
        raise ValueError("solution has no placement to mutate")
    s, i = rng.choice(slots)
    u = solution.stages[s][i]
    width = solution.width
    if rng.random() < 0.5:
        g = profile.gpc(u.gpc)
        anchors = [a for a in range(width - g.out_width + 1) if a != u.anchor]
        if anchors:
            new = Use(rng.choice(anchors), u.gpc, u.count)
            what = f"stage {s + 1}: {u.gpc} anchor {u.anchor} -> {new.anchor}"
        else:
            new = None
    else:
        new = None
    if new is None:
        names = [g.name for g in profile.gpcs if g.name != u.gpc and u.anchor + g.out_width <= width]
        new = Use(u.anchor, rng.choice(names), u.count)
        what = f"stage {s + 1}: {u.gpc} -> {new.gpc} at column {u.anchor}"
    stages = list(solution.stages)
    stages[s] = tuple(sorted(stages[s][:i] + (new,) + stages[s][i + 1 :]))
    return replace(solution, stages=stages), what


def detects(solution: Solution, benchmark: Benchmark, profile: ArchProfile) -> bool:
    """True when a (mutated) solution fails structural or exhaustive/sampled functional checks."""
    try:
        return not validate(solution, benchmark, profile).ok
    except (ValueError, KeyError, IndexError):
        return True
