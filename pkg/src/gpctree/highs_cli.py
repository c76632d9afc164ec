"""Solve an LP file with HiGHS and write ``name value`` lines.

Usage: ``python -m gpctree.highs_cli MODEL.lp OUT.sol [--time-limit S]``
"""

from __future__ import annotations

import argparse
import sys

import highspy


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="gpctree.highs_cli")
    ap.add_argument("lp")
    ap.add_argument("sol")
    ap.add_argument("--time-limit", type=float, default=None)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", args.threads)
    h.setOptionValue("random_seed", 0)
    if args.time_limit is not None:
        h.setOptionValue("time_limit", args.time_limit)
    if h.readModel(args.lp) != highspy.HighsStatus.kOk:
        print(f"cannot read {args.lp}", file=sys.stderr)
        return 1
    h.run()
    ms = h.getModelStatus()
    has_point = h.getInfo().primal_solution_status == 2
    if ms == highspy.HighsModelStatus.kOptimal:
        status = "optimal"
    elif ms == highspy.HighsModelStatus.kInfeasible:
        status = "infeasible"
    elif has_point:
        status = "feasible"
    else:
        status = "unknown"
    lines = [f"# status {status}"]
    if status in ("optimal", "feasible"):
        names = h.getLp().col_names_
        for name, x in zip(names, h.getSolution().col_value):
            lines.append(f"{name} {x:.9g}")
    with open(args.sol, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
