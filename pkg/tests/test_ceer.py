import pytest
from hypothesis import given, strategies as st

from mineps.ceer import CeerBuilder, rst_closure

pairs = st.lists(st.tuples(st.integers(0, 15), st.integers(0, 15)), max_size=25)


def naive_closure(ps, universe):
    """Oracle: iterate reflexive, symmetric and transitive steps to a fixpoint."""
    rel = {(x, x) for x in universe} | set(ps) | {(q, p) for p, q in ps}
    while True:
        new = {(a, d) for a, b in rel for c, d in rel if b == c} - rel
        if not new:
            return rel
        rel |= new


@given(pairs)
def test_related_matches_naive_closure(ps):
    R = rst_closure(ps)
    rel = naive_closure(ps, range(16))
    for p in range(16):
        for q in range(16):
            assert R.related(p, q) == ((p, q) in rel)


@given(pairs, st.integers(0, 15), st.integers(0, 15), st.integers(0, 15))
def test_equivalence_axioms(ps, a, b, c):
    R = rst_closure(ps)
    assert R.related(a, a)
    assert R.related(a, b) == R.related(b, a)
    if R.related(a, b) and R.related(b, c):
        assert R.related(a, c)


@given(pairs)
def test_representative_is_least_member(ps):
    R = rst_closure(ps)
    for p in range(16):
        assert R.representative(p) == min(R.class_members(p))


@given(pairs)
def test_classes_partition_programs(ps):
    R = rst_closure(ps)
    classes = R.classes_among(range(16))
    assert sorted(x for c in classes for x in c) == list(range(16))
    for c in classes:
        assert all(R.related(min(c), x) for x in c)


@given(pairs, st.integers(0, 25))
def test_prefix_is_monotone(ps, n):
    R, P = rst_closure(ps), rst_closure(ps).prefix(n)
    for p in range(16):
        for q in range(16):
            if P.related(p, q):
                assert R.related(p, q)


@given(pairs)
def test_line_round_trip(ps):
    R = rst_closure(ps)
    assert CeerBuilder.from_lines(R.to_lines()).pairs == R.pairs


def test_line_errors():
    with pytest.raises(ValueError, match="line 2"):
        CeerBuilder.from_lines(["P 1 2", "P 1"])
    with pytest.raises(ValueError):
        CeerBuilder().add_pair(-1, 0)


def test_copy_is_independent():
    R = CeerBuilder([(1, 2)])
    C = R.copy()
    C.add_pair(2, 3)
    assert C.related(1, 3) and not R.related(1, 3)
