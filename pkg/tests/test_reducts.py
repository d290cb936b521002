import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from exchstruct.finstruct import EMPTY_SIGNATURE, FinStructure
from exchstruct.reducts import (
    ReductKind,
    betweenness,
    circular,
    circular_raw,
    induce_reduct,
    separation,
    separation_raw,
)

from conftest import distinct_reals


def ranks(xs):
    order = sorted(xs)
    return tuple(order.index(x) for x in xs)


def rotations(seq):
    return {tuple(seq[i:] + seq[:i]) for i in range(len(seq))}


# rank-pattern oracles, independent of the formula text
def oracle_B(a, b, c):
    return ranks((a, b, c))[1] == 1


def oracle_K(a, b, c):
    return ranks((a, b, c)) in rotations([0, 1, 2])


def oracle_S(a, b, c, d):
    r = ranks((a, b, c, d))
    return r in rotations([0, 1, 2, 3]) or r in rotations([3, 2, 1, 0])


def test_betweenness_examples():
    assert betweenness(1, 2, 3)
    assert not betweenness(2, 1, 3)
    assert betweenness(3, 2, 1)


def test_circular_examples():
    assert circular(2, 3, 1)
    assert circular(1, 2, 3)
    assert not circular(2, 1, 3)


def test_separation_examples():
    assert separation(1, 2, 3, 4)
    assert not separation(1, 3, 2, 4)
    assert separation(4, 3, 2, 1)


@pytest.mark.parametrize("fn,arity", [(betweenness, 3), (circular, 3), (separation, 4)])
def test_repeated_arguments_rejected(fn, arity):
    with pytest.raises(ValueError):
        fn(*([1.0] * 2 + list(range(2, arity))))


def test_formulas_match_rank_oracles():
    for p in itertools.permutations((1, 2, 3)):
        assert betweenness(*p) == oracle_B(*p)
        assert circular(*p) == oracle_K(*p)
    for p in itertools.permutations((1, 2, 3, 4)):
        assert separation(*p) == oracle_S(*p)


def test_separation_via_circular_expansion():
    K = circular_raw
    for a, b, c, d in itertools.permutations((1, 2, 3, 4)):
        expanded = (K(a, b, c) and K(b, c, d) and K(c, d, a)) or (K(d, c, b) and K(c, b, a) and K(b, a, d))
        assert separation(a, b, c, d) == expanded


def test_raw_predicates_vectorize():
    X = np.array([[1.0, 2.0, 3.0, 4.0], [1.0, 3.0, 2.0, 4.0], [4.0, 3.0, 2.0, 1.0]])
    out = separation_raw(*X.T)
    assert out.tolist() == [True, False, True]


def test_induce_reduct_examples():
    assert induce_reduct(ReductKind.ORDER, [0.3, 0.1]).relation("lt") == ((1, 0),)
    assert set(induce_reduct(ReductKind.BETWEENNESS, [1, 2, 3]).relation("B")) == {(0, 1, 2), (2, 1, 0)}
    assert induce_reduct(ReductKind.PURE_SET, [0.5, -1.0, 2.0]) == FinStructure.empty(EMPTY_SIGNATURE, 3)


def test_induce_reduct_rejects_duplicates():
    with pytest.raises(ValueError):
        induce_reduct(ReductKind.ORDER, [1.0, 1.0])


def test_kind_names():
    assert [k.value for k in ReductKind] == ["pure-set", "order", "betweenness", "circular", "separation"]
    assert ReductKind.from_name("circular") is ReductKind.CIRCULAR
    with pytest.raises(ValueError):
        ReductKind.from_name("cyclic")


@given(distinct_reals(max_size=6), st.sampled_from(list(ReductKind)))
def test_only_the_order_pattern_matters(t, kind):
    # a strictly increasing map keeps the order pattern and so the induced structure
    moved = [np.cbrt(x) * 7.0 - 3.0 for x in t]
    if len(set(moved)) < len(moved):
        return
    assert induce_reduct(kind, t) == induce_reduct(kind, moved)


def _relabel(values, n, f):
    return [f(v, n) for v in values]


def _rotate(v, n):
    return v % n + 1


def _reverse(v, n):
    return n + 1 - v


@pytest.mark.parametrize("n", range(1, 6))
def test_reduct_symmetries(n):
    for p in itertools.permutations(range(1, n + 1)):
        rot = _relabel(p, n, _rotate)
        rev = _relabel(p, n, _reverse)
        base = {k: induce_reduct(k, p) for k in ReductKind}
        assert induce_reduct(ReductKind.BETWEENNESS, rev) == base[ReductKind.BETWEENNESS]
        assert induce_reduct(ReductKind.CIRCULAR, rot) == base[ReductKind.CIRCULAR]
        assert induce_reduct(ReductKind.SEPARATION, rot) == base[ReductKind.SEPARATION]
        assert induce_reduct(ReductKind.SEPARATION, rev) == base[ReductKind.SEPARATION]


def test_symmetries_are_not_vacuous():
    p = (1, 2, 3)
    assert induce_reduct(ReductKind.ORDER, _relabel(p, 3, _reverse)) != induce_reduct(ReductKind.ORDER, p)
    assert induce_reduct(ReductKind.CIRCULAR, _relabel(p, 3, _reverse)) != induce_reduct(ReductKind.CIRCULAR, p)
    assert induce_reduct(ReductKind.BETWEENNESS, (2, 1, 3)) != induce_reduct(ReductKind.BETWEENNESS, p)
