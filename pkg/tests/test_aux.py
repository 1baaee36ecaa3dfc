import pytest
from hypothesis import given, strategies as st

from mineps.aux import (AuxContractError, AuxNumbering, NotFoundWithinBudget, decode_even,
                        even_index, in_reserved_family)
from mineps.kernel import (EMPTY, Converges, Distinct, FiniteConstant, ProvedDivergent,
                           TotalConstant)
from mineps.lazyset import Cofinite
from mineps.machine import IDENTITY, Phi


def graph(aux, k, n=40):
    return tuple(aux.alpha_eval(k, x, 8) for x in range(n))


@given(st.integers(0, 3000), st.integers(0, 3000))
def test_even_stream_is_one_to_one(a, b):
    aux = AuxNumbering("ladder")
    k1, k2 = 2 * a, 2 * b
    if k1 != k2:
        assert decode_even(k1) != decode_even(k2)
        assert isinstance(aux.separate(k1, k2, 16), Distinct)


@given(st.integers(0, 3000))
def test_even_stream_avoids_every_reserved_family(a):
    """No even-stream function is constant on its domain."""
    aux = AuxNumbering("grid")
    c, n, tag = decode_even(2 * a)
    values = {o.value for o in graph(aux, 2 * a, n + 2) if isinstance(o, Converges)}
    assert values == {c, tag} and tag != c
    assert aux.alpha_eval(2 * a, n + 1, 4) == ProvedDivergent()
    assert not aux.realizes_reserved(2 * a)


@given(st.integers(0, 30), st.integers(1, 30), st.integers(0, 5))
def test_even_index_shape(c, n, u):
    k = even_index(c, n, u)
    assert k % 2 == 0
    assert decode_even(k)[:2] == (c, n)


def brute_extenders(value, length, limit):
    """Oracle: scan every even index below the limit."""
    return [k for k in range(0, limit, 2)
            if decode_even(k)[0] == value and decode_even(k)[1] >= length]


@pytest.mark.parametrize("value, length", [(0, 1), (2, 4), (3, 1), (1, 6)])
def test_extender_candidates_increase_and_are_complete(value, length):
    aux = AuxNumbering("ladder")
    gen = aux.extender_candidates(FiniteConstant(value, length))
    cands = [next(gen) for _ in range(40)]
    assert cands == sorted(cands)
    assert cands[:10] == brute_extenders(value, length, cands[9] + 1)


def test_find_extenders_respects_src_and_budget():
    aux = AuxNumbering("ladder")
    prefix = FiniteConstant(2, 4)
    first = aux.find_extenders(prefix, Cofinite(), 2, 100)
    again = aux.find_extenders(prefix, Cofinite().without(first[:1]), 2, 100)
    assert again[0] == first[1]
    with pytest.raises(NotFoundWithinBudget):
        aux.find_extenders(prefix, Cofinite(), 2, 1)
    with pytest.raises(ValueError):
        aux.find_extenders(prefix, Cofinite(), 0, 10)


def test_reserved_family_membership():
    assert in_reserved_family("ladder", FiniteConstant(2, 4))
    assert not in_reserved_family("ladder", FiniteConstant(2, 5))
    assert in_reserved_family("grid", FiniteConstant(7, 2))     # 7 = pair(1, 2), so i = 1
    assert not in_reserved_family("grid", FiniteConstant(7, 3))
    assert in_reserved_family("grown", TotalConstant(9))
    assert not in_reserved_family("ladder", TotalConstant(9))
    assert not in_reserved_family("ladder", EMPTY)
    with pytest.raises(ValueError):
        in_reserved_family("nope", EMPTY)


def test_odd_stream_wraps_the_machine():
    aux = AuxNumbering("ladder", Phi())
    k = 2 * IDENTITY + 1
    assert aux.alpha_eval(k, 0, 8) == Converges(k)
    from mineps.kernel import pair
    assert aux.alpha_eval(k, 3, 8) == Converges(pair(k, 2))
    with pytest.raises(AuxContractError):
        aux.realizes_reserved(3)
    with pytest.raises(AuxContractError):
        aux.separate(4, 4, 8)


def test_even_stream_separation_exhaustive_below_1024():
    """Every pair of distinct even indices below 2^10 separates, and the
    witness input really tells the two functions apart."""
    aux = AuxNumbering("ladder")
    evens = range(0, 1 << 10, 2)
    values = {k: {} for k in evens}

    def at(k, x):
        if x not in values[k]:
            values[k][x] = aux.alpha_eval(k, x, 8)
        return values[k][x]

    for k in evens:
        assert not aux.realizes_reserved(k)
        for k2 in evens:
            if k2 <= k:
                continue
            v = aux.separate(k, k2, 8)
            assert isinstance(v, Distinct), (k, k2)
            assert at(k, v.witness) != at(k2, v.witness), (k, k2, v.witness)
