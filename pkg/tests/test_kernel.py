import pytest
from hypothesis import given, strategies as st

from mineps.aux import AuxNumbering
from mineps.kernel import (EMPTY, AuxIndex, BudgetExhausted, Converges, Distinct, Equal,
                           EvalEnvironment, FiniteConstant, MachineIndex,
                           MisconfiguredEnvironment, ProvedDivergent, TotalConstant, Unknown,
                           const_prefix, evaluate, ext_equal, extends, pair, parse_descriptor,
                           prefix_shape, probe, triple, unpair, untriple)
from mineps.machine import IDENTITY, LOOP, Phi

nat = st.integers(min_value=0, max_value=10**6)


def diagonal_order(n):
    """Independent oracle: list the first n pairs by walking diagonals."""
    out, d = [], 0
    while len(out) < n:
        for x in range(d + 1):
            out.append((x, d - x))
        d += 1
    return out[:n]


def test_pair_matches_diagonal_walk():
    for z, (x, y) in enumerate(diagonal_order(2000)):
        assert pair(x, y) == z
        assert unpair(z) == (x, y)


@given(nat, nat)
def test_unpair_inverts_pair(x, y):
    assert unpair(pair(x, y)) == (x, y)


@given(st.integers(min_value=0, max_value=10**12))
def test_pair_inverts_unpair(z):
    assert pair(*unpair(z)) == z


@given(nat, nat, nat)
def test_triples_nest_right(x, y, z):
    assert triple(x, y, z) == pair(x, pair(y, z))
    assert untriple(triple(x, y, z)) == (x, y, z)


def test_pair_rejects_negatives():
    with pytest.raises(ValueError):
        pair(-1, 0)
    with pytest.raises(ValueError):
        unpair(-3)


descriptors = st.one_of(
    st.just(EMPTY),
    st.builds(FiniteConstant, st.integers(0, 5), st.integers(1, 6)),
    st.builds(TotalConstant, st.integers(0, 5)),
)


@given(descriptors)
def test_descriptor_text_round_trip(d):
    assert parse_descriptor(str(d)) == d


def test_parse_descriptor_forms():
    assert parse_descriptor("A:grid:12") == AuxIndex("grid", 12)
    assert parse_descriptor("M:7") == MachineIndex(7)
    assert parse_descriptor("FC:3:0") == EMPTY
    for bad in ("", "FC:1", "TC:x", "Q:1"):
        with pytest.raises(ValueError):
            parse_descriptor(bad)


def test_const_prefix_normalizes_empty():
    assert const_prefix(4, 0) is EMPTY
    assert const_prefix(4, 2) == FiniteConstant(4, 2)
    with pytest.raises(ValueError):
        FiniteConstant(4, 0)
    assert prefix_shape(EMPTY) == (-1, 0)
    assert prefix_shape(TotalConstant(1)) is None


def brute_equal(a, b, n=12):
    """Oracle for closed-form descriptors: compare outcomes on inputs below n."""
    for x in range(n):
        oa, ob = evaluate(a, x, 0), evaluate(b, x, 0)
        if oa != ob:
            return Distinct(x)
    return Equal()


@given(descriptors, descriptors)
def test_ext_equal_agrees_with_pointwise_oracle(a, b):
    v = ext_equal(a, b, 16)
    oracle = brute_equal(a, b)
    assert type(v) is type(oracle)
    if isinstance(v, Distinct):
        # the witness really separates the two functions
        assert evaluate(a, v.witness, 0) != evaluate(b, v.witness, 0)


@given(descriptors, descriptors)
def test_ext_equal_is_symmetric(a, b):
    assert type(ext_equal(a, b, 16)) is type(ext_equal(b, a, 16))


@given(st.integers(0, 5), st.integers(1, 6), descriptors)
def test_extends_matches_graph_containment(v, n, d):
    prefix = FiniteConstant(v, n)
    contained = all(evaluate(d, x, 0) == Converges(v) for x in range(n))
    assert isinstance(extends(d, prefix, 16), Equal) == contained


def test_extends_empty_prefix_is_always_equal():
    assert extends(TotalConstant(3), EMPTY, 4) == Equal()
    with pytest.raises(ValueError):
        extends(EMPTY, TotalConstant(1), 4)


def test_aux_and_machine_need_an_environment():
    with pytest.raises(MisconfiguredEnvironment):
        evaluate(AuxIndex("ladder", 0), 0, 4)
    with pytest.raises(MisconfiguredEnvironment):
        evaluate(MachineIndex(0), 0, 4)
    env = EvalEnvironment(machine=Phi(), aux={})
    with pytest.raises(MisconfiguredEnvironment):
        evaluate(AuxIndex("ladder", 0), 0, 4, env)


def test_machine_descriptors_evaluate_step_bounded():
    env = EvalEnvironment(machine=Phi())
    assert evaluate(MachineIndex(IDENTITY), 3, 10, env) == Converges(3)
    assert isinstance(evaluate(MachineIndex(LOOP), 3, 10, env), BudgetExhausted)
    # a looping program is never provably different from EMPTY by probing
    assert isinstance(ext_equal(MachineIndex(LOOP), EMPTY, 8, env), Unknown)
    assert probe(MachineIndex(IDENTITY), TotalConstant(0), 8, env) == Distinct(1)


def test_even_aux_compares_structurally():
    aux = AuxNumbering("ladder")
    env = EvalEnvironment(aux={"ladder": aux})
    from mineps.aux import even_index
    k = even_index(2, 3)
    a = AuxIndex("ladder", k)
    assert extends(a, FiniteConstant(2, 3), 4, env) == Equal()
    assert extends(a, FiniteConstant(2, 4), 4, env) == Distinct(3)
    assert ext_equal(a, FiniteConstant(2, 3), 4, env) == Distinct(3)
    assert ext_equal(a, TotalConstant(1), 4, env) == Distinct(0)
    assert evaluate(a, 5, 4, env) == ProvedDivergent()
