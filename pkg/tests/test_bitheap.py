import pytest
from hypothesis import given
from hypothesis import strategies as st

from gpctree.bitheap import MAX_BITS, BitHeap, HeapError, max_value, render_dots, value

heaps = st.lists(st.integers(0, 12), min_size=0, max_size=8).map(BitHeap)


def test_literal_is_msb_first():
    h = BitHeap.parse("0,6,0,6")
    assert h.columns == (6, 0, 6, 0)
    assert h.literal() == "0,6,0,6"


def test_getitem_beyond_range_is_zero():
    h = BitHeap([3])
    assert h[0] == 3 and h[5] == 0 and h[-1] == 0


@pytest.mark.parametrize("bad", ["1,x", "1,,2"])
def test_bad_literal(bad):
    with pytest.raises(HeapError):
        BitHeap.parse(bad)


def test_limits():
    with pytest.raises(HeapError):
        BitHeap([-1])
    with pytest.raises(HeapError):
        BitHeap([MAX_BITS, 1])
    assert BitHeap([MAX_BITS]).total_bits == MAX_BITS


def test_max_value_examples():
    assert max_value(BitHeap([6])) == 6
    assert max_value(BitHeap([128, 128])) == 384
    assert max_value(BitHeap([3, 3, 3])) == 21
    assert max_value(BitHeap([])) == 0


def test_value_checks_shape():
    assert value([[1, 0, 1], [1]]) == 4
    with pytest.raises(HeapError):
        value([[1, 0]], BitHeap([3]))


def test_render_dots():
    assert render_dots([2, 1]) == ". o\no o"
    assert render_dots([]) == ""
    assert render_dots([0]) == "."


@given(heaps)
def test_literal_roundtrip(h):
    assert BitHeap.parse(h.literal()) == h


@given(heaps, heaps)
def test_add_is_columnwise(a, b):
    s = a + b
    assert max_value(s) == max_value(a) + max_value(b)
    assert s.total_bits == a.total_bits + b.total_bits


@given(heaps)
def test_padding_and_normalizing_keep_value(h):
    assert max_value(h.padded(len(h) + 3)) == max_value(h)
    assert max_value(h.normalized()) == max_value(h)
    assert not h.normalized().columns or h.normalized().columns[-1] > 0
