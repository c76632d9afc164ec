"""Synthesis, sweep and metrics reports.

Each report is first built as a plain dict; the JSON form is that dict and
the text form is rendered from it, so both always carry the same numbers.
Nothing time-dependent goes into a report.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction

from .benchgen import Benchmark
from .bitheap import render_dots
from .gpclib import ArchProfile, metrics, round_half_up
from .solution import Solution

DOTS_MAX_HEIGHT = 32
REPORT_VERSION = 1


def _heights(lsb_first) -> str:
    return ",".join(str(x) for x in reversed(lsb_first))


def synth_report(
    solution: Solution,
    benchmark: Benchmark,
    profile: ArchProfile,
    spec: str,
    verification: dict | None,
    options: dict | None = None,
) -> dict:
    heaps = solution.heights or solution.heaps(profile)
    adder = solution.final_adder
    return {
        "version": REPORT_VERSION,
        "benchmark": {
            "name": benchmark.name,
            "spec": spec,
            "heap": benchmark.heap.literal(),
            "primary": benchmark.primary_desc or None,
        },
        "profile": profile.name,
        "method": solution.method,
        "status": solution.status,
        "LE": {
            "primary": solution.primary_cost,
            "compression": solution.compression_cost,
            "final_adder": solution.adder_cost,
            "total": solution.total_cost,
        },
        "stages": solution.stage_count,
        "final_adder": None if adder is None else {"lo": adder.lo, "hi": adder.hi, "cost": adder.cost},
        "usage": solution.usage(),
        "heaps": [_heights(h) for h in heaps],
        "verification": verification if verification is not None else {"skipped": True},
        "options": dict(options or {}),
        "solution": solution.to_dict(),
    }


def _dots(lsb_first) -> list[str]:
    if max(lsb_first, default=0) > DOTS_MAX_HEIGHT:
        return [f"  heights {_heights(lsb_first)} (too tall to draw)"]
    art = render_dots(list(lsb_first))
    return ["  " + line for line in art.splitlines()] if art else ["  (empty)"]


def render_synth_text(rep: dict) -> str:
    le = rep["LE"]
    bench = rep["benchmark"]
    out = [
        f"benchmark {bench['name']} heap {bench['heap'] or '0'} profile {rep['profile']}",
        f"method {rep['method']} status {rep['status']}",
        f"LE={le['total']} stages={rep['stages']}",
        f"  primary      {le['primary']}" + (f"  ({bench['primary']})" if bench["primary"] else ""),
        f"  compression  {le['compression']}",
    ]
    fa = rep["final_adder"]
    span = "" if fa is None else f"  (columns {fa['lo']}..{fa['hi']})"
    out.append(f"  final adder  {le['final_adder']}{span}")
    out.append("usage:")
    if rep["usage"]:
        wide = max(len(k) for k in rep["usage"])
        for name, n in rep["usage"].items():
            out.append(f"  {name:<{wide}}  {n:>5}")
    else:
        out.append("  (none)")
    for s, h in enumerate(rep["heaps"]):
        label = "residue" if s == len(rep["heaps"]) - 1 else f"stage {s + 1} input"
        out.append(f"{label}: {h}")
        out.extend(_dots([int(x) for x in reversed(h.split(","))]))
    v = rep["verification"]
    if v.get("skipped"):
        out.append("verify: SKIPPED (--unsafe)")
    else:
        st = v["structural"]
        out.append(f"verify: structural {'ok' if st['ok'] else 'FAIL'}")
        out.extend(f"  {d}" for d in st["diagnostics"])
        f = v["functional"]
        if f is not None:
            mode = "exhaustive" if f["exhaustive"] else "sampled"
            out.append(f"verify: functional {f['samples']} {mode} vectors, {f['mismatches']} mismatches")
    return "\n".join(out) + "\n"


# -- sweep ----------------------------------------------------------------------------


def reduction_pct(base: int, cost: int) -> Fraction:
    return Fraction(0) if base == 0 else Fraction(100 * (base - cost), base)


def sweep_report(rows: list[dict], profiles: list[str], baseline: str) -> dict:
    """``rows`` hold ``{"benchmark", "results": {profile: {"LE", "stages", "status"}}}``."""
    out_rows = []
    for row in rows:
        base = row["results"].get(baseline)
        cells = {}
        for p in profiles:
            r = row["results"].get(p)
            if r is None or r.get("LE") is None:
                cells[p] = {"status": r["status"] if r else "missing", "LE": None, "stages": None}
                continue
            cell = dict(r)
            if base and base.get("LE") is not None:
                cell["reduction_pct"] = float(round_half_up(reduction_pct(base["LE"], r["LE"]), 2))
                cell["fewer_stages"] = r["stages"] < base["stages"]
            cells[p] = cell
        out_rows.append({"benchmark": row["benchmark"], "results": cells, "monotone": _monotone(cells)})
    return {"version": REPORT_VERSION, "baseline": baseline, "profiles": list(profiles), "rows": out_rows}


_FAMILIES = (("xilinx-baseline", "x-luxor", "x-luxor-plus"), ("intel-baseline", "i-luxor", "i-luxor-plus"))


def _monotone(cells: dict) -> bool | None:
    """LUXOR+ <= LUXOR <= baseline within each vendor family that was swept."""
    verdict = None
    for fam in _FAMILIES:
        les = [cells[p]["LE"] for p in fam if p in cells and cells[p].get("LE") is not None]
        if len(les) >= 2:
            ok = all(a >= b for a, b in zip(les, les[1:]))
            verdict = ok if verdict is None else verdict and ok
    return verdict


def render_sweep_text(rep: dict) -> str:
    profiles = rep["profiles"]
    wide = max([len("benchmark")] + [len(r["benchmark"]) for r in rep["rows"]])
    colw = max([16] + [len(p) for p in profiles])
    out = [f"baseline {rep['baseline']}; * = fewer stages than baseline"]
    out.append(f"{'benchmark':<{wide}}  " + "  ".join(f"{p:>{colw}}" for p in profiles) + "  monotone")
    for row in rep["rows"]:
        cells = []
        for p in profiles:
            c = row["results"][p]
            if c["LE"] is None:
                text = c["status"]
            else:
                text = f"{c['LE']}/{c['stages']}"
                if "reduction_pct" in c:
                    text += f" {round_half_up(Fraction(str(c['reduction_pct'])), 0)}%"
                if c.get("fewer_stages"):
                    text += "*"
            cells.append(f"{text:>{colw}}")
        mono = {True: "yes", False: "NO", None: "-"}[row["monotone"]]
        out.append(f"{row['benchmark']:<{wide}}  " + "  ".join(cells) + f"  {mono}")
    return "\n".join(out) + "\n"


def sweep_csv(rep: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["benchmark", "profile", "status", "LE", "stages", "reduction_pct", "fewer_stages"])
    for row in rep["rows"]:
        for p in rep["profiles"]:
            c = row["results"][p]
            w.writerow([row["benchmark"], p, c["status"], c["LE"], c["stages"], c.get("reduction_pct", ""),
                        c.get("fewer_stages", "")])
    return buf.getvalue()


# -- metrics table --------------------------------------------------------------------------


def metrics_report(profile: ArchProfile) -> dict:
    rows = []
    for g in profile.compressing:
        m = metrics(g).display()
        a = m["slack"]
        rows.append({
            "gpc": g.name,
            "kind": g.kind,
            "cost": g.cost,
            "delay": g.delay,
            "E": m["efficiency"],
            "S": m["strength"],
            "APD": m["apd"],
            "A": a,
        })
    return {"version": REPORT_VERSION, "profile": profile.name, "final_rule": profile.final_rule, "rows": rows}


def render_metrics_text(rep: dict) -> str:
    rows = rep["rows"]
    wide = max([3] + [len(r["gpc"]) for r in rows])
    out = [f"profile {rep['profile']} (final adder: {rep['final_rule']})",
           f"{'GPC':<{wide}}  {'LE':>3}  {'E':>5}  {'S':>5}  {'APD':>6}  {'A':>6}"]
    for r in rows:
        apd = r["APD"] if r["APD"] is not None else "-"
        out.append(f"{r['gpc']:<{wide}}  {r['cost']:>3}  {r['E']:>5}  {r['S']:>5}  {apd:>6}  {r['A']:>6}")
    return "\n".join(out) + "\n"


def dumps(rep: dict) -> str:
    return json.dumps(rep, indent=2) + "\n"
