"""Staged integer program for compressor-tree synthesis.

Variables (all non-negative integers):

* ``N_s_c``  bits in column ``c`` entering stage ``s`` (stage ``St`` is the
  residue handed to the final adder),
* ``Cb_s_c`` carry bits into column ``c`` of stage ``s``,
* ``R_s_t_c`` copies of GPC ``t`` anchored at column ``c`` in stage ``s``,
* ``F_c``    binary, 1 when the final carry-propagate adder spans column ``c``.

The objective counts GPC LEs plus one LE per final-adder column.  The adder
starts at the lowest residue column holding two or more bits and runs up to
the most significant result bit; a residue with at most one bit per column
is already the binary result and needs no adder.

``St`` counts compression stages only; the final adder is not a stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .bitheap import BitHeap, max_value
from .gpclib import RAGGED_CPA, ArchProfile, Gpc

CARRY_SLACK = Fraction(999, 1000)
HALF = Fraction(1, 2)

# ragged carry-propagate adder limits: bits, carries, bits + carries
RAGGED_N, RAGGED_C, RAGGED_NC = 4, 2, 5
TERNARY_N = 3


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: tuple[tuple[str, Fraction], ...]
    sense: str  # "<=", ">=", "="
    rhs: Fraction

    def holds(self, values: dict[str, int]) -> bool:
        lhs = sum(coef * values.get(var, 0) for var, coef in self.coeffs)
        if self.sense == "<=":
            return lhs <= self.rhs
        if self.sense == ">=":
            return lhs >= self.rhs
        return lhs == self.rhs


@dataclass(frozen=True)
class Placement:
    stage: int
    gpc: int
    anchor: int
    var: str


@dataclass
class IlpModel:
    heap: BitHeap
    profile: ArchProfile
    stages: int
    width: int
    gpcs: tuple[Gpc, ...]
    variables: list[str] = field(default_factory=list)
    bounds: dict[str, tuple[int, int | None]] = field(default_factory=dict)
    constraints: list[Constraint] = field(default_factory=list)
    objective: dict[str, int] = field(default_factory=dict)
    placements: list[Placement] = field(default_factory=list)

    @property
    def result_width(self) -> int:
        """Bits in the largest sum; column ``width - 1`` is head-room only."""
        return self.width - 1

    def add_var(self, name: str, lb: int = 0, ub: int | None = None) -> str:
        self.variables.append(name)
        self.bounds[name] = (lb, ub)
        return name

    def add(self, name: str, terms: dict[str, Fraction | int], sense: str, rhs: Fraction | int) -> None:
        coeffs = tuple((v, Fraction(c)) for v, c in terms.items() if c != 0)
        self.constraints.append(Constraint(name, coeffs, sense, Fraction(rhs)))

    @property
    def final_rule(self) -> str:
        return self.profile.final_rule

    def placements_in(self, stage: int) -> Iterator[Placement]:
        return (p for p in self.placements if p.stage == stage)

    def objective_value(self, values: dict[str, int]) -> int:
        return sum(coef * values.get(var, 0) for var, coef in self.objective.items())

    def check(self, values: dict[str, int]) -> list[str]:
        """Names of violated constraints and bounds (empty when feasible)."""
        bad = []
        for var in self.variables:
            val = values.get(var, 0)
            lb, ub = self.bounds[var]
            if val != int(val) or val < lb or (ub is not None and val > ub):
                bad.append(f"bound {var}")
        bad.extend(c.name for c in self.constraints if not c.holds(values))
        return bad


def column_count(heap: BitHeap) -> int:
    return max_value(heap).bit_length() + 1


def N(s: int, c: int) -> str:
    return f"N_{s}_{c}"


def Cb(s: int, c: int) -> str:
    return f"Cb_{s}_{c}"


def R(s: int, t: int, c: int) -> str:
    return f"R_{s}_{t}_{c}"


def F(c: int) -> str:
    return f"F_{c}"


ADDER_LE_PER_COLUMN = 1


def adder_span(residue, result_width: int) -> tuple[int, int] | None:
    """Columns ``(lo, hi)`` covered by the final adder, or None if not needed."""
    lo = next((c for c, h in enumerate(residue) if h >= 2 and c < result_width), None)
    if lo is None:
        return None
    return lo, result_width - 1


def adder_cost(residue, result_width: int) -> int:
    span = adder_span(residue, result_width)
    return 0 if span is None else ADDER_LE_PER_COLUMN * (span[1] - span[0] + 1)


def build(heap: BitHeap, profile: ArchProfile, stages: int) -> IlpModel:
    if stages < 0:
        raise ValueError("stage budget must be non-negative")
    width = column_count(heap)
    gpcs = profile.gpcs
    model = IlpModel(heap.normalized().padded(width), profile, stages, width, gpcs)

    for s in range(stages + 1):
        for c in range(width):
            if s == 0:
                model.add_var(N(0, c), heap[c], heap[c])
            else:
                model.add_var(N(s, c))
        for c in range(width):
            model.add_var(Cb(s, c), 0, 0 if c == 0 else None)
    for s in range(stages):
        for t, g in enumerate(gpcs):
            for a in range(width - g.out_width + 1):
                name = model.add_var(R(s, t, a))
                model.placements.append(Placement(s, t, a, name))
                if g.cost:
                    model.objective[name] = g.cost

    for s in range(1, stages + 1):
        cover: list[dict[str, int]] = [{} for _ in range(width)]
        produce: list[dict[str, int]] = [{} for _ in range(width)]
        for p in model.placements_in(s - 1):
            g = gpcs[p.gpc]
            for i, m in enumerate(g.inputs):
                if m and p.anchor + i < width:
                    cover[p.anchor + i][p.var] = m
            for j, k in enumerate(g.outputs):
                if k:
                    produce[p.anchor + j][p.var] = k
        for c in range(width):
            model.add(f"cover_{s}_{c}", {**cover[c], N(s - 1, c): -1}, ">=", 0)
        for c in range(width):
            model.add(f"produce_{s}_{c}", {**produce[c], N(s, c): -1}, "=", 0)

    for s in range(stages + 1):
        for c in range(1, width):
            terms = {Cb(s, c): 1, Cb(s, c - 1): -HALF, N(s, c - 1): -HALF}
            model.add(f"carrylo_{s}_{c}", terms, ">=", -CARRY_SLACK)
            model.add(f"carryhi_{s}_{c}", terms, "<=", 0)

    last = stages
    cap = (RAGGED_N if profile.final_rule == RAGGED_CPA else TERNARY_N) - 1
    for c in range(width - 1):
        model.add_var(F(c), 0, 1)
        model.objective[F(c)] = ADDER_LE_PER_COLUMN
        model.add(f"adder_{c}", {N(last, c): 1, F(c): -cap}, "<=", 1)
        if c:
            model.add(f"adderrun_{c}", {F(c): 1, F(c - 1): -1}, ">=", 0)
    for c in range(width):
        if profile.final_rule == RAGGED_CPA:
            model.add(f"final_nc_{c}", {N(last, c): 1, Cb(last, c): 1}, "<=", RAGGED_NC)
            model.add(f"final_c_{c}", {Cb(last, c): 1}, "<=", RAGGED_C)
            model.add(f"final_n_{c}", {N(last, c): 1}, "<=", RAGGED_N)
        else:
            model.add(f"final_n_{c}", {N(last, c): 1}, "<=", TERNARY_N)
    return model


def residue_ok(heights, rule: str) -> bool:
    """Whether a residue heap satisfies the final-adder rule."""
    if rule == RAGGED_CPA:
        carry = 0
        for h in heights:
            if h > RAGGED_N or carry > RAGGED_C or h + carry > RAGGED_NC:
                return False
            carry = (carry + h) // 2
        return True
    return all(h <= TERNARY_N for h in heights)


def carries(heights) -> list[int]:
    out, carry = [], 0
    for h in heights:
        out.append(carry)
        carry = (carry + h) // 2
    return out


# -- LP file -----------------------------------------------------------------


def _num(x: Fraction | int) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return repr(float(x))


def _expr(terms) -> str:
    parts = []
    for var, coef in terms:
        coef = Fraction(coef)
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = var if mag == 1 else f"{_num(mag)} {var}"
        parts.append(f"{sign} {body}")
    if not parts:
        return "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def _wrap(line: str, limit: int = 200) -> list[str]:
    if len(line) <= limit:
        return [line]
    out, cur = [], ""
    for tok in line.split(" "):
        if cur and len(cur) + 1 + len(tok) > limit and tok in ("+", "-"):
            out.append(cur)
            cur = "   " + tok
        else:
            cur = f"{cur} {tok}" if cur else tok
    out.append(cur)
    return out


def to_lp_file(model: IlpModel) -> str:
    """Serialize to LP format; output is byte-stable for equal models."""
    lines = [f"\\ compressor tree: heap {model.heap.literal() or '0'}, profile {model.profile.name}, stages {model.stages}"]
    lines.append("Minimize")
    obj_terms = [(v, model.objective[v]) for v in model.variables if v in model.objective]
    lines.extend(_wrap(" obj: " + _expr(obj_terms)))
    lines.append("Subject To")
    for con in model.constraints:
        lines.extend(_wrap(f" {con.name}: {_expr(con.coeffs)} {con.sense} {_num(con.rhs)}"))
    lines.append("Bounds")
    for var in model.variables:
        lb, ub = model.bounds[var]
        if ub is not None and lb == ub:
            lines.append(f" {var} = {ub}")
        elif ub is not None:
            lines.append(f" {lb} <= {var} <= {ub}")
        else:
            lines.append(f" {var} >= {lb}")
    lines.append("Generals")
    for var in model.variables:
        lines.append(f" {var}")
    lines.append("End")
    return "\n".join(lines) + "\n"
