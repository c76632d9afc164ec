"""GPC data model, quality metrics and the built-in architecture libraries.

Tuples inside a :class:`Gpc` are rank-indexed (index 0 is the least
significant column).  Names follow the usual ``C<inputs>:<outputs>`` form
with both tuples written most-significant first, e.g. ``C25:121``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import jsonschema

LUT_BASED = "lut-based"
SLICE_BASED = "slice-based"
PSEUDO_WIRE = "pseudo-wire"
COMPRESSOR = "compressor"
KINDS = (LUT_BASED, SLICE_BASED, PSEUDO_WIRE, COMPRESSOR)

RAGGED_CPA = "ragged-cpa"
TERNARY = "ternary"

SLICE_LES = 4

PROFILE_NAMES = (
    "xilinx-baseline",
    "x-luxor",
    "x-luxor-plus",
    "intel-baseline",
    "i-luxor",
    "i-luxor-plus",
)


class LibraryError(ValueError):
    pass


class ProfileMismatch(LibraryError):
    pass


def _digits(ranks: Sequence[int]) -> str:
    return "".join(str(n) for n in reversed(ranks))


def gpc_name(inputs: Sequence[int], outputs: Sequence[int]) -> str:
    return f"C{_digits(inputs)}:{_digits(outputs)}"


def parse_tuple(text: str) -> tuple[int, ...]:
    """``"0606"`` -> rank-indexed ``(6, 0, 6, 0)``; one digit per column."""
    if not text.isdigit():
        raise LibraryError(f"bad column tuple {text!r}")
    return tuple(int(ch) for ch in reversed(text))


def parse_name(name: str) -> tuple[tuple[int, ...], tuple[int, ...]]:
    if not name.startswith("C") or name.count(":") != 1:
        raise LibraryError(f"bad GPC name {name!r}")
    left, right = name[1:].split(":")
    return parse_tuple(left), parse_tuple(right)


@dataclass(frozen=True)
class Gpc:
    name: str
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    cost: int
    delay: float | None = None
    kind: str = LUT_BASED

    @classmethod
    def from_name(cls, name: str, cost: int, delay: float | None = None, kind: str = LUT_BASED) -> "Gpc":
        inputs, outputs = parse_name(name)
        return cls(name, inputs, outputs, cost, delay, kind)

    @property
    def p(self) -> int:
        return sum(self.inputs)

    @property
    def q(self) -> int:
        return sum(self.outputs)

    @property
    def in_width(self) -> int:
        return len(self.inputs)

    @property
    def out_width(self) -> int:
        return len(self.outputs)

    @property
    def max_in(self) -> int:
        return sum(n << i for i, n in enumerate(self.inputs))

    @property
    def max_out(self) -> int:
        return sum(n << j for j, n in enumerate(self.outputs))

    @property
    def is_wire(self) -> bool:
        return self.kind == PSEUDO_WIRE

    def encode(self, count: int) -> list[int]:
        """Number of set output bits per column when the GPC emits ``count``."""
        if not 0 <= count <= self.max_out:
            raise ValueError(f"{self.name} cannot represent {count}")
        per_col = [0] * len(self.outputs)
        rest = count
        for j in range(len(self.outputs) - 1, -1, -1):
            per_col[j] = min(self.outputs[j], rest >> j)
            rest -= per_col[j] << j
        if rest:
            raise ValueError(f"{self.name} output columns leave gaps; cannot encode {count}")
        return per_col

    def contiguous(self) -> bool:
        """True when every value up to ``max_out`` has an output encoding."""
        reach = 0
        for j, n in enumerate(self.outputs):
            if n and (1 << j) > reach + 1:
                return False
            reach += n << j
        return True


PSEUDO_WIRE_GPC = Gpc("C1:1", (1,), (1,), 0, None, PSEUDO_WIRE)


def slack(g: Gpc) -> Fraction:
    """1 - (1 + max input value) / (1 + max output value)."""
    return 1 - Fraction(1 + g.max_in, 1 + g.max_out)


@dataclass(frozen=True)
class GpcMetrics:
    efficiency: Fraction
    strength: Fraction
    apd: Fraction | None
    slack: Fraction

    def display(self, places: Mapping[str, int] | None = None) -> dict[str, str | None]:
        places = {"efficiency": 2, "strength": 2, "apd": 2, "slack": 3, **(places or {})}
        out: dict[str, str | None] = {}
        for key in ("efficiency", "strength", "apd", "slack"):
            val = getattr(self, key)
            out[key] = None if val is None else str(round_half_up(val, places[key]))
        return out


def round_half_up(x: Fraction | float, places: int) -> Decimal:
    if isinstance(x, Fraction):
        d = Decimal(x.numerator) / Decimal(x.denominator)
    else:
        d = Decimal(str(x))
    return d.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)


def metrics(g: Gpc | str, profile: "ArchProfile | None" = None) -> GpcMetrics:
    """Efficiency, strength, area-performance degree and slack of a GPC.

    When ``profile`` is given, cost and delay are taken from the profile's
    copy of the GPC (looked up by name).
    """
    if profile is not None:
        name = g if isinstance(g, str) else g.name
        try:
            g = profile.gpc(name)
        except KeyError:
            raise ProfileMismatch(f"{name} has no cost under profile {profile.name}") from None
    if isinstance(g, str):
        raise ValueError(f"{g}: a GPC name needs a profile to supply its cost")
    reduction = g.p - g.q
    if g.cost <= 0:
        efficiency = Fraction(0) if reduction == 0 else Fraction(reduction)
    else:
        efficiency = Fraction(reduction, g.cost)
    apd = None
    if g.delay is not None and g.cost > 0:
        apd = Fraction(reduction**2) / (g.cost * Fraction(str(g.delay)))
    return GpcMetrics(efficiency, Fraction(g.p, g.q), apd, slack(g))


# -- atoms and couples -----------------------------------------------------

ATOM_SHAPES = {"06": (6, 0), "14": (4, 1), "22": (2, 2)}


@dataclass(frozen=True)
class Atom:
    tag: str
    cost: int

    @property
    def shape(self) -> tuple[int, int]:
        return ATOM_SHAPES[self.tag]

    def bonus_shape(self) -> tuple[int, int]:
        """Shape when this atom sits in the lowest position of a couple."""
        lo, hi = self.shape
        return (lo + 1, hi) if self.tag != "06" else (lo, hi)


def atoms_for(profile_name: str) -> list[Atom]:
    cheap06 = profile_name == "x-luxor-plus"
    return [Atom("06", 1 if cheap06 else 2), Atom("14", 2), Atom("22", 2)]


def compose_couples(
    atoms: Iterable[Atom], width: int | Iterable[int], profile_name: str = "xilinx-baseline"
) -> list[Gpc]:
    """All slice-based GPCs made by chaining ``width`` atoms on a carry chain.

    Atoms are listed most-significant first in the resulting name; the lowest
    atom takes the extra first-rank input where the atom allows it.  A couple
    always occupies one slice.  Width-2 compositions also include the
    non-decomposable C1325:11111.
    """
    atoms = sorted(atoms, key=lambda a: a.tag)
    if not atoms:
        return []
    widths = [width] if isinstance(width, int) else list(width)
    result: list[Gpc] = []
    for w in widths:
        cheapest = min(a.cost for a in atoms) * w
        if cheapest > SLICE_LES:
            raise LibraryError(
                f"{w} atoms need at least {cheapest} LEs under {profile_name}; a slice has {SLICE_LES}"
            )
        for combo in itertools.product(atoms, repeat=w):
            if sum(a.cost for a in combo) > SLICE_LES:
                continue
            # combo is most-significant first
            inputs: list[int] = []
            for pos, atom in enumerate(reversed(combo)):
                inputs.extend(atom.bonus_shape() if pos == 0 else atom.shape)
            outputs = (1,) * (2 * w + 1)
            name = gpc_name(inputs, outputs)
            result.append(Gpc(name, tuple(inputs), outputs, SLICE_LES, None, SLICE_BASED))
        if w == 2:
            result.append(Gpc.from_name("C1325:11111", SLICE_LES, kind=SLICE_BASED))
    return result


# -- profiles ---------------------------------------------------------------


@dataclass(frozen=True)
class ArchProfile:
    name: str
    gpcs: tuple[Gpc, ...]
    final_rule: str
    primary_fusion: int = 2
    overhead: Mapping[str, float] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.final_rule not in (RAGGED_CPA, TERNARY):
            raise LibraryError(f"unknown final rule {self.final_rule!r}")
        names = [g.name for g in self.gpcs]
        if len(set(names)) != len(names):
            raise LibraryError(f"duplicate GPC names in profile {self.name}")

    def gpc(self, name: str) -> Gpc:
        for g in self.gpcs:
            if g.name == name:
                return g
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(g.name == name for g in self.gpcs)

    @property
    def compressing(self) -> tuple[Gpc, ...]:
        return tuple(g for g in self.gpcs if not g.is_wire)

    def with_costs(self, **costs: int) -> "ArchProfile":
        """Copy with some GPC costs replaced; keys use ``C6_111`` for ``C6:111``."""
        wanted = {k.replace("_", ":"): v for k, v in costs.items()}
        gpcs = tuple(replace(g, cost=wanted.get(g.name, g.cost)) for g in self.gpcs)
        return replace(self, gpcs=gpcs)


OVERHEADS = {
    "xilinx-baseline": {"area": 1.00, "delay": 1.00},
    "x-luxor": {"area": 0.99, "delay": 1.06},
    "x-luxor-plus": {"area": 1.06, "delay": 1.09},
    "intel-baseline": {"area": 1.00, "delay": 1.00},
    "i-luxor": {"area": 1.00, "delay": 1.01},
    "i-luxor-plus": {"area": 1.05, "delay": 1.03},
}

# Optional C4:2 proxy: four dots plus the chained carry-in in one column,
# sum in the same column, carry and carry-out one column up.
C42_PROXY = Gpc("C4:2", (5,), (1, 2), 1, None, COMPRESSOR)


def _xilinx(name: str, c6_cost: int, with_c42: bool) -> ArchProfile:
    gpcs = [
        PSEUDO_WIRE_GPC,
        Gpc.from_name("C3:11", 1),
        Gpc.from_name("C6:111", c6_cost),
        Gpc.from_name("C25:121", 2),
    ]
    if with_c42:
        gpcs.append(C42_PROXY)
    gpcs += compose_couples(atoms_for("xilinx-baseline"), 2, "xilinx-baseline")
    if name == "x-luxor-plus":
        gpcs += compose_couples(atoms_for(name), (3, 4), name)
    fusion = 2 if name == "xilinx-baseline" else 1
    return ArchProfile(name, tuple(gpcs), RAGGED_CPA, fusion, OVERHEADS[name])


def _intel(name: str) -> ArchProfile:
    c6 = 3 if name == "intel-baseline" else 2
    c25 = 1 if name == "i-luxor-plus" else 2
    d = 0.39 if name == "i-luxor-plus" else 0.38
    gpcs = (
        PSEUDO_WIRE_GPC,
        Gpc.from_name("C3:11", 1),
        Gpc.from_name("C6:111", c6, d),
        Gpc.from_name("C15:111", 3, d),
        Gpc.from_name("C23:111", 2, d),
        Gpc.from_name("C25:121", c25, d),
    )
    fusion = 2 if name == "intel-baseline" else 1
    return ArchProfile(name, gpcs, TERNARY, fusion, OVERHEADS[name])


def builtin_library(name: str, *, with_c42: bool = False) -> ArchProfile:
    """One of the six built-in profiles.

    ``with_c42`` adds the C4:2 placement proxy to Xilinx profiles; it is off
    by default because placements cannot express the horizontal carry link.
    """
    if name == "xilinx-baseline":
        return _xilinx(name, 3, with_c42)
    if name in ("x-luxor", "x-luxor-plus"):
        return _xilinx(name, 2, with_c42)
    if name in ("intel-baseline", "i-luxor", "i-luxor-plus"):
        return _intel(name)
    raise LibraryError(f"unknown profile {name!r}; expected one of {', '.join(PROFILE_NAMES)}")


# -- library files ----------------------------------------------------------

LIBRARY_SCHEMA = {
    "type": "object",
    "required": ["name", "final_rule", "gpcs"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "final_rule": {"enum": [RAGGED_CPA, TERNARY]},
        "primary_fusion": {"type": "integer", "minimum": 0},
        "overhead": {"type": "object", "additionalProperties": {"type": "number"}},
        "gpcs": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "inputs", "outputs", "cost"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "inputs": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0}},
                    "outputs": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0}},
                    "cost": {"type": "integer", "minimum": 0},
                    "delay": {"type": "number", "exclusiveMinimum": 0},
                    "kind": {"enum": list(KINDS)},
                },
            },
        },
    },
}


def profile_to_dict(profile: ArchProfile) -> dict:
    gpcs = []
    for g in profile.gpcs:
        entry = {
            "name": g.name,
            "inputs": list(reversed(g.inputs)),
            "outputs": list(reversed(g.outputs)),
            "cost": g.cost,
        }
        if g.delay is not None:
            entry["delay"] = g.delay
        entry["kind"] = g.kind
        gpcs.append(entry)
    return {
        "name": profile.name,
        "final_rule": profile.final_rule,
        "primary_fusion": profile.primary_fusion,
        "overhead": dict(profile.overhead),
        "gpcs": gpcs,
    }


def profile_from_dict(data: dict, source: str = "<library>") -> ArchProfile:
    validator = jsonschema.Draft7Validator(LIBRARY_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.path) or "<root>"
        raise LibraryError(f"{source}: field {where}: {err.message}")
    gpcs = []
    for i, entry in enumerate(data["gpcs"]):
        kind = entry.get("kind", LUT_BASED)
        g = Gpc(
            entry["name"],
            tuple(reversed(entry["inputs"])),
            tuple(reversed(entry["outputs"])),
            entry["cost"],
            entry.get("delay"),
            kind,
        )
        where = f"{source}: field gpcs/{i} ({g.name})"
        if g.p < 1 or g.q < 1:
            raise LibraryError(f"{where}: needs at least one input and one output bit")
        if not g.contiguous():
            raise LibraryError(f"{where}: output columns cannot encode every count")
        if slack(g) < 0:
            raise LibraryError(f"{where}: arithmetic slack negative ({float(slack(g)):.3f})")
        if g.is_wire and (g.inputs, g.outputs, g.cost) != ((1,), (1,), 0):
            raise LibraryError(f"{where}: a pseudo-wire must be C1:1 with cost 0")
        if not g.is_wire and g.cost < 1:
            raise LibraryError(f"{where}: cost must be a positive number of LEs")
        gpcs.append(g)
    names = {g.name for g in gpcs}
    for required in ("C3:11", "C6:111"):
        if required not in names:
            raise LibraryError(f"{source}: field gpcs: library must contain {required}")
    if not any(g.is_wire for g in gpcs):
        gpcs.insert(0, PSEUDO_WIRE_GPC)
    try:
        return ArchProfile(
            data["name"],
            tuple(gpcs),
            data["final_rule"],
            data.get("primary_fusion", 2),
            data.get("overhead", {}),
        )
    except LibraryError as exc:
        raise LibraryError(f"{source}: {exc}") from None


def save_library(profile: ArchProfile, path: str | Path) -> None:
    Path(path).write_text(json.dumps(profile_to_dict(profile), indent=2) + "\n")


def load_library(path: str | Path) -> ArchProfile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise LibraryError(f"{path}: cannot read library: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LibraryError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return profile_from_dict(data, str(path))


def resolve_profile(name_or_path: str) -> ArchProfile:
    if name_or_path in PROFILE_NAMES:
        return builtin_library(name_or_path)
    return load_library(name_or_path)
