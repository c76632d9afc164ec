import sys

import pytest

from gpctree.benchgen import parse_spec
from gpctree.bitheap import BitHeap
from gpctree.gpclib import builtin_library
from gpctree.ilpmodel import build
from gpctree.solver.builtin import solve_builtin
from gpctree.solver.common import FEASIBLE, INFEASIBLE, OPTIMAL, UNKNOWN, Infeasible, SolverError
from gpctree.solver.external import MalformedSolution, parse_solution, render_command, solve_external
from gpctree.solver.heuristic import METRICS, heuristic_synthesize
from gpctree.solver.manager import SolveTimeout, default_time_budget, parse_solver, synthesize
from gpctree.verify import validate
from reference_values import ALL_PROFILES

XB = builtin_library("xilinx-baseline")
XL = builtin_library("x-luxor")
XP = builtin_library("x-luxor-plus")


def _fake_solver(tmp_path, body: str) -> str:
    script = tmp_path / "fake.py"
    script.write_text("import sys\nlp, sol = sys.argv[1], sys.argv[2]\n" + body)
    return f"{sys.executable} {script} {{lp}} {{sol}}"


# -- builtin ---------------------------------------------------------------------------


@pytest.mark.parametrize("profile,cost", [(XB, 3), (XL, 2), (XP, 2)])
def test_popcount6_single_c6(profile, cost):
    out = solve_builtin(build(BitHeap([6]), profile, 1))
    assert out.status == OPTIMAL and out.objective == cost


def test_popcount6_needs_a_stage():
    assert solve_builtin(build(BitHeap([6]), XB, 0)).status == INFEASIBLE


def test_builtin_is_deterministic():
    m = build(BitHeap([9, 9]), XL, 2)
    a, b = solve_builtin(m), solve_builtin(m)
    assert a.values == b.values and a.objective == b.objective


def test_builtin_size_cap():
    with pytest.raises(ValueError, match="limited to 64"):
        solve_builtin(build(BitHeap([65]), XB, 3))
    out = solve_builtin(build(BitHeap([12, 12]), XB, 2), max_bits=None)
    assert out.status == OPTIMAL


def test_builtin_timeout_returns_incumbent_or_unknown():
    m = build(BitHeap([12, 12]), XB, 2)
    out = solve_builtin(m, time_budget=0.05)
    assert out.status in (FEASIBLE, UNKNOWN, OPTIMAL)
    if out.status == FEASIBLE:
        assert m.check(out.values) == [] and out.objective >= 15


# -- external -----------------------------------------------------------------------------


def test_external_bridge_agrees_with_builtin():
    for heap, prof, st in ([6], XB, 1), ([5, 5], builtin_library("i-luxor-plus"), 1), ([10, 10], XL, 1):
        m = build(BitHeap(heap), prof, st)
        a, b = solve_builtin(m), solve_external(m, time_budget=60)
        assert (a.status, a.objective) == (b.status, b.objective)
        assert m.check(b.values) == []


def test_external_reports_infeasible_d128_in_one_stage():
    m = build(BitHeap([128, 128]), XB, 1)
    assert solve_external(m, time_budget=60).status == INFEASIBLE


def test_external_command_failure(tmp_path):
    m = build(BitHeap([6]), XB, 1)
    with pytest.raises(SolverError, match="exited with code 3"):
        solve_external(m, _fake_solver(tmp_path, "sys.exit(3)"))
    with pytest.raises(SolverError, match="not found"):
        solve_external(m, "/nonexistent/solver {lp} {sol}")


def test_external_malformed_file(tmp_path):
    m = build(BitHeap([6]), XB, 1)
    cmd = _fake_solver(tmp_path, "open(sol, 'w').write('N_0_0 six\\n')")
    with pytest.raises(MalformedSolution):
        solve_external(m, cmd)
    cmd = _fake_solver(tmp_path, "pass")
    with pytest.raises(MalformedSolution, match="no solution file"):
        solve_external(m, cmd)


def test_external_answer_is_revalidated(tmp_path):
    m = build(BitHeap([6]), XB, 1)
    cmd = _fake_solver(tmp_path, "open(sol, 'w').write('# status optimal\\nN_0_0 6\\n')")
    with pytest.raises(SolverError, match="violates"):
        solve_external(m, cmd)


def test_parse_native_and_cbc_layouts():
    m = build(BitHeap([6]), XB, 1)
    status, values = parse_solution("# status infeasible\n", m)
    assert status == INFEASIBLE and values == {}
    status, values = parse_solution("N_0_0 6.0000000001\n", m)
    assert status == OPTIMAL and values["N_0_0"] == 6
    status, values = parse_solution("Optimal - objective value 3\n  0 N_0_0 6 0\n", m)
    assert status == OPTIMAL and values["N_0_0"] == 6
    status, _ = parse_solution("Infeasible - objective value 0\n", m)
    assert status == INFEASIBLE
    for bad in ("", "N_0_0 2.5\n", "X_9 1\n", "N_0_0 1 2 3\n", "# status maybe\n", "N_0_0 inf\n"):
        with pytest.raises(MalformedSolution):
            parse_solution(bad, m)


def test_render_command():
    argv = render_command("solver --in {lp} --out {sol} -t {time}", "a.lp", "b.sol", 5)
    assert argv == ["solver", "--in", "a.lp", "--out", "b.sol", "-t", "5"]
    assert render_command("solver", "a.lp", "b.sol", 5) == ["solver", "a.lp", "b.sol"]


# -- manager ----------------------------------------------------------------------------------


def test_parse_solver():
    assert parse_solver("builtin") == ("builtin", None)
    assert parse_solver("external") == ("external", None)
    assert parse_solver("external:cbc {lp}") == ("external", "cbc {lp}")
    for bad in ("cplex", "external:", ""):
        with pytest.raises(ValueError):
            parse_solver(bad)


def test_time_budget_env(monkeypatch):
    monkeypatch.setenv("GPCTREE_TIME_BUDGET", "12.5")
    assert default_time_budget() == 12.5
    monkeypatch.setenv("GPCTREE_TIME_BUDGET", "soon")
    with pytest.raises(SolverError):
        default_time_budget()
    monkeypatch.delenv("GPCTREE_TIME_BUDGET")
    assert default_time_budget() == 300


def test_synthesize_s6_and_empty():
    sol = synthesize(parse_spec("S:6"), XL)
    assert (sol.total_cost, sol.stage_count, sol.adder_cost) == (2, 1, 0)
    assert sol.heights[-1] == (1, 1, 1, 0)
    empty = synthesize(parse_spec("HEAP:0"), XB)
    assert (empty.total_cost, empty.stage_count) == (0, 0)


def test_synthesize_reports_primary_cost():
    b = parse_spec("BNN:3x3")
    assert synthesize(b, XB).primary_cost == 6
    assert synthesize(b, XL).primary_cost == 3


def test_luxor_plus_beats_luxor_on_add6x7():
    b = parse_spec("ADD:6x7")
    assert synthesize(b, XP).total_cost < synthesize(b, XL).total_cost


def test_stage_limit_and_timeout():
    with pytest.raises(Infeasible):
        synthesize(parse_spec("S:24"), XB, stage_limit=1)
    b = parse_spec("D:12")
    try:
        sol = synthesize(b, XB, time_budget=1e-9)
    except SolveTimeout:
        return
    # an incumbent may exist before the first clock check
    assert sol.status == FEASIBLE and validate(sol, b, XB).ok


def test_deeper_budget_can_be_cheaper():
    # S14 on i-luxor-plus: 9 LE in one stage, 7 LE once a second stage is allowed
    b = parse_spec("S:14")
    IP = builtin_library("i-luxor-plus")
    shallow = synthesize(b, IP)
    deep = synthesize(b, IP, stage_limit=2, min_stages=2)
    assert (shallow.total_cost, shallow.stage_count) == (9, 1)
    assert (deep.total_cost, deep.stage_count) == (7, 2)
    assert validate(deep, b, IP).ok
    assert deep.total_cost <= heuristic_synthesize(b, IP, "efficiency").total_cost


def test_synthesize_external_matches_builtin():
    b = parse_spec("D:7")
    a = synthesize(b, builtin_library("intel-baseline"))
    e = synthesize(b, builtin_library("intel-baseline"), solver="external", time_budget=60)
    assert (a.total_cost, a.stage_count) == (e.total_cost, e.stage_count)
    assert validate(e, b, builtin_library("intel-baseline")).ok


# -- heuristic ---------------------------------------------------------------------------------


@pytest.mark.parametrize("metric", METRICS)
def test_heuristic_s6_matches_ilp(metric):
    for prof in (XB, XL):
        h = heuristic_synthesize(parse_spec("S:6"), prof, metric)
        ilp = synthesize(parse_spec("S:6"), prof)
        assert (h.total_cost, h.stage_count, h.usage()) == (ilp.total_cost, ilp.stage_count, ilp.usage())


def test_heuristic_s128_efficiency():
    sol = heuristic_synthesize(parse_spec("S:128"), XB, "efficiency")
    assert 100 <= sol.total_cost <= 110 and sol.stage_count <= 5


@pytest.mark.parametrize("spec", ["S:9", "D:6", "ADD:4x5", "MAC3:2", "HEAP:3,0,7"])
@pytest.mark.parametrize("pname", ALL_PROFILES)
def test_heuristic_never_beats_ilp(spec, pname):
    b, prof = parse_spec(spec), builtin_library(pname)
    ilp = synthesize(b, prof)
    for metric in METRICS:
        h = heuristic_synthesize(b, prof, metric)
        assert validate(h, b, prof).ok
        assert ilp.stage_count <= h.stage_count
        if h.stage_count == ilp.stage_count:
            assert ilp.total_cost <= h.total_cost


def test_heuristic_rejects_unknown_metric():
    with pytest.raises(ValueError):
        heuristic_synthesize(parse_spec("S:6"), XB, "speed")
