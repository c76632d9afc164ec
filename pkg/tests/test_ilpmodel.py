from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gpctree.bitheap import BitHeap
from gpctree.gpclib import builtin_library
from gpctree.ilpmodel import (
    CARRY_SLACK,
    Cb,
    N,
    R,
    adder_cost,
    adder_span,
    build,
    carries,
    column_count,
    residue_ok,
    to_lp_file,
)
from gpctree.solver.common import assignment

XB = builtin_library("xilinx-baseline")


def _r_index(model, name):
    return next(t for t, g in enumerate(model.gpcs) if g.name == name)


def test_columns_have_headroom():
    assert column_count(BitHeap([6])) == 4
    assert column_count(BitHeap([128, 128])) == 10
    assert column_count(BitHeap([0])) == 1


def test_input_stage_is_fixed():
    m = build(BitHeap([128, 128]), XB, 2)
    assert m.bounds[N(0, 0)] == (128, 128)
    assert m.bounds[N(0, 1)] == (128, 128)
    assert all(m.bounds[N(0, c)] == (0, 0) for c in range(2, m.width))


def test_placement_count_excludes_out_of_range_anchors():
    m = build(BitHeap([6]), XB, 1)
    expected = sum(max(0, m.width - g.out_width + 1) for g in XB.gpcs)
    assert len(m.placements) == expected
    assert all(p.anchor + m.gpcs[p.gpc].out_width <= m.width for p in m.placements)
    # C6:111 fits at anchors 0 and 1 of the 4 columns; the 9-output couple nowhere
    assert {p.anchor for p in m.placements if m.gpcs[p.gpc].name == "C6:111"} == {0, 1}


def test_coverage_uses_inputs_and_production_uses_outputs():
    m = build(BitHeap([2, 5]), XB, 1)
    t = _r_index(m, "C25:121")
    var = R(0, t, 0)
    cons = {c.name: dict(c.coeffs) for c in m.constraints}
    assert cons["cover_1_0"][var] == 5 and cons["cover_1_1"][var] == 2
    assert cons["produce_1_0"][var] == 1 and cons["produce_1_1"][var] == 2 and cons["produce_1_2"][var] == 1


def test_objective_has_gpc_costs_and_adder_columns():
    m = build(BitHeap([6]), XB, 1)
    t = _r_index(m, "C6:111")
    assert m.objective[R(0, t, 0)] == 3
    wire = _r_index(m, "C1:1")
    assert R(0, wire, 0) not in m.objective
    assert all(m.objective[f"F_{c}"] == 1 for c in range(m.width - 1))


def test_hand_plan_satisfies_model():
    m = build(BitHeap([6]), XB, 1)
    plan = [{(_r_index(m, "C6:111"), 0): 1}]
    values = assignment(m, plan)
    assert m.check(values) == []
    assert m.objective_value(values) == 3
    values[N(1, 0)] += 1
    assert "produce_1_0" in m.check(values)


def test_uncovered_bit_is_a_violation():
    m = build(BitHeap([6]), XB, 1)
    values = assignment(m, [{(_r_index(m, "C3:11"), 0): 1}])
    values[R(0, _r_index(m, "C1:1"), 0)] = 0
    assert "cover_1_0" in m.check(values)


def test_adder_span_and_cost():
    assert adder_span([1, 1, 1], 3) is None
    assert adder_span([3, 2, 1, 0], 3) == (0, 2)
    assert adder_cost([1, 2, 1, 0], 3) == 2
    assert adder_cost([1, 1, 0, 2], 3) == 0  # head-room column is never summed


def test_residue_rules():
    assert residue_ok([4, 1, 0], "ragged-cpa")
    assert not residue_ok([5, 0], "ragged-cpa")
    assert not residue_ok([4, 4, 4, 0], "ragged-cpa")  # carries 2,3 break the rule
    assert residue_ok([3, 3, 3], "ternary") and not residue_ok([4], "ternary")


def test_lp_file_is_deterministic():
    a = to_lp_file(build(BitHeap([6]), XB, 1))
    b = to_lp_file(build(BitHeap([6]), XB, 1))
    assert a == b
    lines = a.splitlines()
    assert " N_0_0 = 6" in lines
    for section in ("Minimize", "Subject To", "Bounds", "Generals", "End"):
        assert section in lines
    assert all(len(line) <= 200 for line in lines)


def test_lp_objective_coefficient_of_c6():
    m = build(BitHeap([6]), XB, 1)
    t = _r_index(m, "C6:111")
    obj = to_lp_file(m).split("Subject To")[0]
    assert f"3 {R(0, t, 0)}" in obj


def test_empty_heap_model():
    m = build(BitHeap([0]), XB, 1)
    assert m.width == 1 and m.check(assignment(m, [{}])) == []


def test_negative_stage_budget():
    with pytest.raises(ValueError):
        build(BitHeap([6]), XB, -1)


@given(st.lists(st.integers(0, 9), min_size=1, max_size=8))
def test_carry_relaxation_admits_exactly_the_floor(heights):
    cs = carries(heights)
    for c in range(1, len(heights)):
        prev = Fraction(cs[c - 1] + heights[c - 1], 2)
        admitted = [k for k in range(0, 20) if -CARRY_SLACK <= k - prev <= 0]
        assert admitted == [cs[c]]


@given(st.lists(st.integers(0, 7), min_size=1, max_size=4))
def test_carry_constraints_hold_for_decoded_heaps(heights):
    heap = BitHeap(heights)
    m = build(heap, builtin_library("x-luxor"), 0)
    values = assignment(m, [])
    carry_rows = [c for c in m.constraints if c.name.startswith("carry")]
    assert all(c.holds(values) for c in carry_rows)
    for c in range(m.width):
        assert values[Cb(0, c)] == carries(list(heap.normalized().padded(m.width)))[c]
