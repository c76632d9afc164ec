import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gpctree.gpclib import (
    C42_PROXY,
    PROFILE_NAMES,
    RAGGED_CPA,
    TERNARY,
    Gpc,
    LibraryError,
    ProfileMismatch,
    atoms_for,
    builtin_library,
    compose_couples,
    gpc_name,
    load_library,
    metrics,
    parse_name,
    profile_from_dict,
    profile_to_dict,
    round_half_up,
    save_library,
    slack,
)
from reference_values import COUPLES_BASELINE, COUPLES_PLUS, INTEL_GPC_ROWS


def test_names_are_msb_first():
    g = Gpc.from_name("C25:121", 2)
    assert g.inputs == (5, 2)
    assert g.outputs == (1, 2, 1)
    assert parse_name("C1325:11111") == ((5, 2, 3, 1), (1, 1, 1, 1, 1))
    assert gpc_name((5, 2), (1, 2, 1)) == "C25:121"


@pytest.mark.parametrize("bad", ["C6", "6:111", "C:1", "Cx:11"])
def test_bad_names(bad):
    with pytest.raises(ValueError):
        parse_name(bad)


def test_c6_metrics_under_each_cost():
    base = metrics("C6:111", builtin_library("xilinx-baseline"))
    lux = metrics("C6:111", builtin_library("x-luxor"))
    assert base.efficiency == 1 and lux.efficiency == Fraction(3, 2)
    assert base.strength == 2 and base.slack == Fraction(1, 8)


def test_metrics_profile_mismatch():
    with pytest.raises(ProfileMismatch):
        metrics("C06060606:111111111", builtin_library("xilinx-baseline"))


def test_apd_uses_delay():
    m = metrics("C6:111", builtin_library("intel-baseline"))
    assert m.display({"apd": 1})["apd"] == "7.9"
    assert metrics(Gpc.from_name("C3:11", 1)).apd is None
    with pytest.raises(ValueError):
        metrics("C3:11")


def test_round_half_up():
    assert str(round_half_up(Fraction(1, 8), 2)) == "0.13"
    assert str(round_half_up(Fraction(1, 32), 3)) == "0.031"
    assert str(round_half_up(Fraction(-5, 2), 0)) == "-3"


@pytest.mark.parametrize("row", COUPLES_BASELINE + COUPLES_PLUS, ids=lambda r: r[0])
def test_couple_rows(row):
    name, p, q, luts, e, s, a = row
    prof = builtin_library("x-luxor-plus")
    g = prof.gpc(name)
    m = metrics(g).display()
    assert (g.p, g.q, g.cost) == (p, q, luts)
    assert (m["efficiency"], m["strength"], m["slack"]) == (e, s, a)


@pytest.mark.parametrize("row", INTEL_GPC_ROWS, ids=lambda r: r[0])
def test_intel_rows(row):
    name, s, a, delay, luts, apd = row
    g = builtin_library("intel-baseline").gpc(name)
    m = metrics(g)
    assert (g.delay, g.cost) == (delay, luts)
    assert str(round_half_up(m.apd, 1)) == apd
    places = len(s.split(".")[1]) if "." in s else 0
    assert str(round_half_up(m.strength, places)) == s
    places = len(a.split(".")[1]) if "." in a else 0
    assert str(round_half_up(m.slack, places)) == a


def test_couples_baseline_and_plus():
    two = {g.name for g in compose_couples(atoms_for("xilinx-baseline"), 2)}
    wide = {g.name for g in compose_couples(atoms_for("x-luxor-plus"), (3, 4), "x-luxor-plus")}
    assert two == {r[0] for r in COUPLES_BASELINE}
    assert wide == {r[0] for r in COUPLES_PLUS}


def test_couples_that_do_not_fit_a_slice():
    with pytest.raises(LibraryError):
        compose_couples(atoms_for("xilinx-baseline"), 3)
    assert compose_couples([], 2) == []


def test_every_couple_costs_one_slice():
    for g in compose_couples(atoms_for("x-luxor-plus"), (2, 3, 4), "x-luxor-plus"):
        assert g.cost == 4 and g.contiguous() and slack(g) >= 0


def test_profile_contents():
    sizes = {name: len(builtin_library(name).gpcs) for name in PROFILE_NAMES}
    assert sizes["xilinx-baseline"] == sizes["x-luxor"] == 14
    assert sizes["x-luxor-plus"] == 22
    assert builtin_library("x-luxor").gpc("C6:111").cost == 2
    ipl = builtin_library("i-luxor-plus")
    assert ipl.gpc("C25:121").cost == 1 and ipl.gpc("C6:111").delay == 0.39
    assert ipl.final_rule == TERNARY and builtin_library("x-luxor").final_rule == RAGGED_CPA
    assert builtin_library("xilinx-baseline").primary_fusion == 2
    assert builtin_library("x-luxor").primary_fusion == 1


def test_c42_is_opt_in():
    assert "C4:2" not in builtin_library("x-luxor")
    prof = builtin_library("x-luxor", with_c42=True)
    assert prof.gpc("C4:2") == C42_PROXY and slack(C42_PROXY) == 0


def test_with_costs():
    prof = builtin_library("xilinx-baseline").with_costs(C6_111=2)
    assert prof.gpc("C6:111").cost == 2


@pytest.mark.parametrize("name", PROFILE_NAMES)
def test_library_roundtrip(tmp_path, name):
    prof = builtin_library(name)
    path = tmp_path / "lib.json"
    save_library(prof, path)
    again = load_library(path)
    assert again.gpcs == prof.gpcs and again.final_rule == prof.final_rule


def _lib(**change):
    data = profile_to_dict(builtin_library("x-luxor"))
    data.update(change)
    return data


def test_library_errors_name_the_field(tmp_path):
    bad = _lib()
    bad["gpcs"][1]["cost"] = -1
    with pytest.raises(LibraryError, match="gpcs/1"):
        profile_from_dict(bad)
    bad = _lib()
    bad["gpcs"].append({"name": "C7:11", "inputs": [7], "outputs": [1, 1], "cost": 1})
    with pytest.raises(LibraryError, match="slack negative"):
        profile_from_dict(bad)
    bad = _lib(gpcs=[g for g in _lib()["gpcs"] if g["name"] != "C3:11"])
    with pytest.raises(LibraryError, match="C3:11"):
        profile_from_dict(bad)
    with pytest.raises(LibraryError, match="final_rule"):
        profile_from_dict(_lib(final_rule="wallace"))
    path = tmp_path / "broken.json"
    path.write_text('{"name": "x",\n "gpcs": [}')
    with pytest.raises(LibraryError, match="line 2"):
        load_library(path)


def test_missing_wire_is_inserted():
    data = _lib()
    data["gpcs"] = [g for g in data["gpcs"] if g["name"] != "C1:1"]
    prof = profile_from_dict(json.loads(json.dumps(data)))
    assert prof.gpcs[0].is_wire


shapes = st.lists(st.integers(0, 6), min_size=1, max_size=4).filter(lambda v: v[0] > 0 and sum(v) > 0)


@given(shapes)
def test_counter_with_enough_outputs_has_nonnegative_slack(inputs):
    max_in = sum(m << i for i, m in enumerate(inputs))
    g = Gpc(gpc_name(inputs, [1] * max_in.bit_length()), tuple(inputs), (1,) * max_in.bit_length(), 1)
    assert slack(g) >= 0
    for count in range(max_in + 1):
        assert sum(n << j for j, n in enumerate(g.encode(count))) == count
