import itertools
import json
import math
import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from exchstruct.measures import IntervalUnion, StdNormal, Uniform01, Weight
from exchstruct.lemmas import (
    EventKind,
    ExponentVector,
    LambdaPoint,
    SymCoeffTable,
    beta_expand,
    beta_formula,
    beta_normalized,
    binomial_cancellation,
    cmeas_table,
    eval_spade,
    eval_spade_brute,
    gamma_sequence,
    mc_event_prob,
    nonconstancy_certificate,
    random_nonconstant_table,
    random_symmetric_table,
    reweighted_event_prob,
    simplex_grid,
    spread_check,
    substituted_polynomial,
    verify_lemmas,
)

F = Fraction
SIGN_PARTS = [IntervalUnion.of(("-inf", 0.0)), IntervalUnion.of((0.0, "inf"))]
SQUARES = SymCoeffTable(2, 1, {(0, 0): 1, (0, 1): 0, (1, 0): 0, (1, 1): 1})
LINEAR = SymCoeffTable(1, 1, {(0,): 0, (1,): 1})


@st.composite
def tables(draw, max_n=4, max_l=3):
    n = draw(st.integers(1, max_n))
    l = draw(st.integers(1, max_l))
    return random_symmetric_table(n, l, random.Random(draw(st.integers(0, 2**32))))


@st.composite
def lambda_points(draw, l):
    weights = draw(st.lists(st.integers(1, 20), min_size=l + 1, max_size=l + 1))
    return LambdaPoint(tuple(F(w, sum(weights)) for w in weights))


# --- tables and points --------------------------------------------------------------


def test_table_validation():
    with pytest.raises(ValueError, match="incomplete"):
        SymCoeffTable(2, 1, {(0, 0): 1})
    with pytest.raises(ValueError, match="negative"):
        SymCoeffTable.constant(1, 1, -1)
    asym = SymCoeffTable(2, 1, {(0, 0): 1, (0, 1): 1, (1, 0): 0, (1, 1): 1})
    assert not asym.is_symmetric()
    with pytest.raises(ValueError):
        eval_spade(asym, LambdaPoint((F(1, 2), F(1, 2))))
    with pytest.raises(ValueError):
        spread_check(asym, 10)


def test_lambda_point_validation():
    with pytest.raises(ValueError):
        LambdaPoint((F(1, 2), F(1, 3)))
    with pytest.raises(ValueError):
        LambdaPoint((F(0), F(1)))
    assert LambdaPoint.from_weight(Weight.split_at(0, "3/10", "7/10")).values == (F(3, 10), F(7, 10))


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        eval_spade(SQUARES, LambdaPoint((F(1, 3), F(1, 3), F(1, 3))))
    with pytest.raises(ValueError):
        beta_formula(SQUARES, ExponentVector((1, 0), 2))


def test_table_json_round_trip():
    data = {"n": 2, "l": 1, "a": {"00": "1", "01": "0", "10": "0", "11": "1"}}
    A = SymCoeffTable.from_json(data)
    assert A == SQUARES
    assert A.to_json() == data


def test_exponent_vector():
    e = ExponentVector((1, 2), 4)
    assert (e.total, e.l, e.multinomial) == (3, 2, 12)
    with pytest.raises(ValueError):
        ExponentVector((3, 2), 4)
    assert gamma_sequence((1, 2), 4, 2) == (0, 1, 1, 2)


# --- spade ---------------------------------------------------------------------------


def test_spade_examples():
    assert eval_spade(LINEAR, LambdaPoint((F(1, 3), F(2, 3)))) == F(2, 3)
    assert eval_spade(SQUARES, LambdaPoint((F(1, 4), F(3, 4)))) == F(5, 8)


@given(st.integers(1, 4), st.integers(1, 3), st.fractions(0, 10), st.data())
def test_spade_of_constant_is_constant(n, l, c, data):
    lam = data.draw(lambda_points(l))
    assert eval_spade(SymCoeffTable.constant(n, l, c), lam) == c


@given(tables(), st.data())
def test_grouped_spade_matches_brute_force(A, data):
    lam = data.draw(lambda_points(A.l))
    assert eval_spade(A, lam) == eval_spade_brute(A, lam)


def test_simplex_grid():
    pts = simplex_grid(2, 5)
    assert len(pts) == math.comb(4, 2)
    assert all(sum(p.values) == 1 for p in pts)
    assert simplex_grid(3, 3) == []


def test_spread_examples():
    assert spread_check(SymCoeffTable.constant(2, 1, F(2, 7)), 10) == 1
    assert spread_check(SQUARES, 10) == 5
    assert spread_check(LINEAR, 10) == 9


def test_spread_grows_with_resolution():
    assert spread_check(SQUARES, 10) < spread_check(SQUARES, 20) < spread_check(SQUARES, 40)
    rnd = random.Random(11)
    for _ in range(15):
        A = random_nonconstant_table(rnd.randint(1, 4), rnd.randint(1, 3), rnd)
        counts = [spread_check(A, r) for r in (5, 10, 20)]
        assert counts[0] < counts[1] < counts[2]


def test_nonconstancy_certificate():
    p, q = nonconstancy_certificate(SQUARES)
    assert eval_spade(SQUARES, p) != eval_spade(SQUARES, q)
    assert nonconstancy_certificate(SymCoeffTable.constant(2, 2, 1)) is None


# --- coefficients ------------------------------------------------------------------------


def test_binomial_cancellation_examples():
    assert binomial_cancellation(ExponentVector((1,))) == 0
    assert binomial_cancellation(ExponentVector((2, 1))) == 0
    with pytest.raises(ValueError):
        binomial_cancellation(ExponentVector((0, 0)))


def test_binomial_cancellation_exhaustive():
    for length in range(1, 5):
        for k in itertools.product(range(5), repeat=length):
            if sum(k):
                assert binomial_cancellation(ExponentVector(k)) == 0


def test_beta_examples():
    assert beta_expand(SQUARES, ExponentVector((2,), 2)) == 2
    assert beta_expand(SQUARES, ExponentVector((1,), 2)) == -2
    assert beta_formula(SQUARES, ExponentVector((2,), 2)) == 2
    assert beta_formula(SQUARES, ExponentVector((1,), 2)) == -2
    C = SymCoeffTable.constant(3, 2, F(4, 9))
    assert beta_formula(C, ExponentVector((0, 0), 3)) == F(4, 9)
    assert beta_expand(C, ExponentVector((0, 0), 3)) == F(4, 9)
    for k in [(1, 0), (0, 2), (1, 1), (2, 1)]:
        assert beta_formula(C, ExponentVector(k, 3)) == 0
        assert beta_expand(C, ExponentVector(k, 3)) == 0


def test_expansion_bounds():
    with pytest.raises(ValueError):
        beta_expand(SymCoeffTable.constant(5, 1, 1), ExponentVector((1,), 5))


def _sympy_poly(A):
    lam = sympy.symbols(f"x0:{A.l}")
    last = 1 - sum(lam)
    xs = list(lam) + [last]
    expr = sum(sympy.Rational(v.numerator, v.denominator) * sympy.Mul(*[xs[i] for i in s]) for s, v in A.a.items())
    return sympy.Poly(sympy.expand(expr), *lam), lam


@given(tables(max_n=3, max_l=2))
def test_expansion_against_sympy(A):
    P, lam = _sympy_poly(A)
    ours = substituted_polynomial(A)
    for k in itertools.product(range(A.n + 1), repeat=A.l):
        if sum(k) > A.n:
            continue
        expected = F(str(P.coeff_monomial(sympy.Mul(*[x**e for x, e in zip(lam, k)]))))
        assert ours.coeff(k) == expected
        assert beta_formula(A, ExponentVector(k, A.n)) == expected


@given(tables())
def test_formula_matches_expansion(A):
    for k in itertools.product(range(A.n + 1), repeat=A.l):
        if sum(k) <= A.n:
            e = ExponentVector(k, A.n)
            assert beta_formula(A, e) == beta_expand(A, e)
            assert beta_normalized(A, e) * e.multinomial == beta_formula(A, e)


def test_normalized_beta_under_induction_hypothesis():
    # a_t = a* whenever t has fewer than k entries below l
    rnd = random.Random(5)
    for n, l in [(2, 1), (3, 2), (4, 3), (4, 1)]:
        for k in itertools.product(range(n + 1), repeat=l):
            if not 1 <= sum(k) <= n:
                continue
            a_star = F(rnd.randint(0, 5), 7)
            vals = {}
            for combo in itertools.combinations_with_replacement(range(l + 1), n):
                below = sum(x != l for x in combo)
                vals[combo] = a_star if below < sum(k) else F(rnd.randint(0, 9), rnd.randint(1, 9))
            A = SymCoeffTable.from_multisets(n, l, vals)
            e = ExponentVector(k, n)
            assert beta_normalized(A, e) == A[gamma_sequence(k, n, l)] - A.a_star


# --- the event tables -------------------------------------------------------------------


def test_cmeas_same_sign_table():
    A = cmeas_table(StdNormal(), SIGN_PARTS, EventKind.SAME_SIGN, 2)
    assert A.a == {(0, 0): 1, (1, 1): 1, (0, 1): 0, (1, 0): 0}


def test_cmeas_same_cell_uniform():
    parts = [IntervalUnion.of((0, 0.5)), IntervalUnion.of((0.5, 1.0))]
    A = cmeas_table(Uniform01(), parts, EventKind.SAME_CELL, 2)
    assert A.a == {(0, 0): 1, (1, 1): 1, (0, 1): 0, (1, 0): 0}


def test_cmeas_single_coordinate_is_conditional_probability():
    parts = [IntervalUnion.of(("-inf", -1.0)), IntervalUnion.of((-1.0, 1.0)), IntervalUnion.of((1.0, "inf"))]
    A = cmeas_table(StdNormal(), parts, EventKind.ALL_NONNEGATIVE, 1)
    assert A[(0,)] == 0 and A[(2,)] == 1
    assert float(A[(1,)]) == pytest.approx(0.5, abs=1e-12)
    assert all(0 <= v <= 1 for v in A.a.values())


def test_cmeas_zero_mass_part():
    with pytest.raises(ValueError):
        cmeas_table(Uniform01(), [IntervalUnion.of((2, 3)), IntervalUnion.of((0, 1))], EventKind.SAME_CELL, 2)


@pytest.mark.parametrize("lam", [F(1, 10), F(3, 10), F(1, 2)])
def test_same_sign_probability_closed_form(lam):
    A = cmeas_table(StdNormal(), SIGN_PARTS, EventKind.SAME_SIGN, 2)
    assert reweighted_event_prob(A, LambdaPoint((lam, 1 - lam))) == lam**2 + (1 - lam) ** 2


def test_same_sign_examples():
    A = cmeas_table(StdNormal(), SIGN_PARTS, EventKind.SAME_SIGN, 2)
    assert reweighted_event_prob(A, LambdaPoint((F(1, 2), F(1, 2)))) == F(1, 2)
    assert reweighted_event_prob(A, LambdaPoint((F(3, 10), F(7, 10)))) == F(29, 50)


def _random_weight(rnd):
    cuts = sorted(rnd.sample([-1.5, -0.5, 0.0, 0.4, 1.0, 2.0], 2))
    raw = [rnd.randint(1, 9) for _ in range(3)]
    masses = [F(r, sum(raw)) for r in raw]
    parts = [IntervalUnion.of(("-inf", cuts[0])), IntervalUnion.of((cuts[0], cuts[1])), IntervalUnion.of((cuts[1], "inf"))]
    return Weight(tuple(parts), tuple(masses))


@pytest.mark.parametrize("event", list(EventKind))
def test_monte_carlo_matches_analytic(event, rng):
    rnd = random.Random(hash(event.value) % 1000)
    samples = 100_000
    for _ in range(5):
        W = _random_weight(rnd)
        n = rnd.randint(2, 3)
        A = cmeas_table(StdNormal(), W.parts, event, n)
        p = float(reweighted_event_prob(A, LambdaPoint.from_weight(W)))
        mc = mc_event_prob(StdNormal(), W, event, n, samples, rng)
        assert abs(mc - p) <= 3 * math.sqrt(p * (1 - p) / samples) + 1e-12


# --- sweep --------------------------------------------------------------------------------


def test_verify_lemmas_small_sweep():
    report = verify_lemmas(max_n=3, max_l=2, tables=20, seed=1)
    assert report["status"] == "pass"
    names = [c["identity"] for c in report["checks"]]
    assert names == ["binomial-cancellation", "beta-formula-equals-expansion",
                     "beta-normalized-equals-as-minus-astar", "spread", "spade-constant"]
    json.dumps(report)


def test_verify_lemmas_bounds():
    with pytest.raises(ValueError):
        verify_lemmas(max_n=5)
