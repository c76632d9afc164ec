"""Bridge to any LP-file MIP solver run as a shell command.

The command is a template with ``{lp}``, ``{sol}`` and optionally
``{time}`` placeholders; without placeholders the two paths are appended.
The solver must leave a solution file in one of two layouts:

* ``name value`` pairs, one per line, with ``#`` comments; a line
  ``# status <optimal|feasible|infeasible|unknown>`` sets the status;
* the CBC ``-solu`` layout (a status header such as
  ``Optimal - objective value 79`` followed by ``index name value dual`` rows).

Values are revalidated against the model before anything is returned, so a
buggy solver cannot smuggle in an infeasible answer.
"""

from __future__ import annotations

import math
import os
import shlex
import subprocess
import sys
import tempfile
import time
from pathlib import Path

from ..ilpmodel import IlpModel, to_lp_file
from .common import FEASIBLE, INFEASIBLE, OPTIMAL, UNKNOWN, SolveOutcome, SolverError

ENV_COMMAND = "GPCTREE_SOLVER_CMD"
BRIDGE_COMMAND = f"{shlex.quote(sys.executable)} -m gpctree.highs_cli {{lp}} {{sol}} --time-limit {{time}}"
INT_TOL = 1e-6

_STATUS_WORDS = {
    "optimal": OPTIMAL,
    "feasible": FEASIBLE,
    "infeasible": INFEASIBLE,
    "integer infeasible": INFEASIBLE,
    "unknown": UNKNOWN,
    "stopped": FEASIBLE,
}


class MalformedSolution(SolverError):
    pass


def default_command() -> str:
    return os.environ.get(ENV_COMMAND) or BRIDGE_COMMAND


def render_command(template: str, lp: Path, sol: Path, time_budget: float) -> list[str]:
    fields = {"lp": str(lp), "sol": str(sol), "time": f"{time_budget:g}"}
    argv = shlex.split(template)
    if not any("{lp}" in a or "{sol}" in a for a in argv):
        argv += ["{lp}", "{sol}"]
    return [a.format(**fields) for a in argv]


def _status_from_header(line: str) -> str:
    head = line.split(" - ")[0].strip().lower()
    for word, status in _STATUS_WORDS.items():
        if head.startswith(word):
            return status
    if "infeasible" in head:
        return INFEASIBLE
    if "stopped" in head or "time" in head:
        return FEASIBLE
    raise MalformedSolution(f"unrecognized solver status line {line!r}")


def parse_solution(text: str, model: IlpModel) -> tuple[str, dict[str, int]]:
    """Status and integer values from a solution file; raises on any defect."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise MalformedSolution("empty solution file")
    declared = set(model.variables)
    status = OPTIMAL
    raw: dict[str, float] = {}
    cbc = not lines[0].startswith("#") and len(lines[0].split()) != 2
    if cbc:
        status = _status_from_header(lines[0])
        lines = lines[1:]
    for no, ln in enumerate(lines, 2 if cbc else 1):
        if ln.startswith("#"):
            words = ln[1:].split()
            if len(words) >= 2 and words[0].lower() == "status":
                status = _STATUS_WORDS.get(" ".join(words[1:]).lower())
                if status is None:
                    raise MalformedSolution(f"line {no}: unknown status {' '.join(words[1:])!r}")
            continue
        parts = ln.split()
        if cbc:
            if len(parts) < 3:
                raise MalformedSolution(f"line {no}: expected 'index name value'")
            name, val = parts[1], parts[2]
        else:
            if len(parts) != 2:
                raise MalformedSolution(f"line {no}: expected 'name value', got {ln!r}")
            name, val = parts
        if name not in declared:
            raise MalformedSolution(f"line {no}: unknown variable {name!r}")
        try:
            x = float(val)
        except ValueError:
            raise MalformedSolution(f"line {no}: bad number {val!r}") from None
        if not math.isfinite(x):
            raise MalformedSolution(f"line {no}: non-finite value for {name}")
        raw[name] = x
    if status in (INFEASIBLE, UNKNOWN):
        return status, {}
    values = {}
    for name in model.variables:
        x = raw.get(name, 0.0)
        n = round(x)
        if abs(x - n) > INT_TOL:
            raise MalformedSolution(f"non-integral value {x} for {name}")
        values[name] = int(n)
    return status, values


def solve_external(
    model: IlpModel,
    command: str | None = None,
    time_budget: float = 300.0,
    workdir: str | os.PathLike | None = None,
) -> SolveOutcome:
    template = command or default_command()
    start = time.monotonic()
    with tempfile.TemporaryDirectory(prefix="gpctree-", dir=workdir) as tmp:
        lp = Path(tmp) / "model.lp"
        sol = Path(tmp) / "model.sol"
        lp.write_text(to_lp_file(model))
        argv = render_command(template, lp, sol, time_budget)
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=time_budget + 60)
        except FileNotFoundError as exc:
            raise SolverError(f"solver command not found: {argv[0]}") from exc
        except subprocess.TimeoutExpired as exc:
            raise SolverError(f"solver did not exit within {time_budget + 60:g} s") from exc
        if proc.returncode != 0:
            tail = (proc.stderr or proc.stdout).strip().splitlines()[-3:]
            raise SolverError(f"solver exited with code {proc.returncode}: {' | '.join(tail)}")
        if not sol.exists():
            raise MalformedSolution("solver wrote no solution file")
        status, values = parse_solution(sol.read_text(), model)
    elapsed = time.monotonic() - start
    name = Path(argv[0]).name
    if not values:
        return SolveOutcome(status, wall_time=elapsed, solver=name)
    bad = model.check(values)
    if bad:
        raise SolverError(f"external solution violates {len(bad)} constraint(s), first: {bad[0]}")
    return SolveOutcome(status, values, int(model.objective_value(values)), elapsed, name)
