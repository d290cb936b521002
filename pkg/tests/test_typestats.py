import itertools
import json
import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from exchstruct.borel import builtin, induce_batch, sample_reals
from exchstruct.finstruct import TypeId, induced_substructure, labeled_type
from exchstruct.measures import IntervalUnion, StdNormal, Weight, reweight
from exchstruct.reducts import ReductKind
from exchstruct.typestats import (
    CHUNK_SIZE,
    FrequencyTable,
    TestReport,
    check_high_homogeneity_sampled,
    chi2_critical,
    chi2_sf,
    enumerate_types,
    estimate_frequencies,
    exact_multinomial_test,
    pearson_statistic,
    subdiagram_columns,
    test_distinguish as distinguish,
    test_edge_densities as edge_densities,
    test_exchangeability as exchangeability,
    test_uniformity as uniformity,
)
from exchstruct.borel import ERSampler

from conftest import structures

N = StdNormal()
SPLIT_03 = Weight.split_at(0.0, "3/10", "7/10")
SPLIT_05 = Weight.split_at(0.0, "1/2", "1/2")
THREE_PART = Weight(
    (IntervalUnion.of(("-inf", -1.0), (1.0, 2.0)), IntervalUnion.of((-1.0, 1.0)), IntervalUnion.of((2.0, "inf"))),
    ("1/5", "1/2", "3/10"),
)


# --- chi-square machinery ---------------------------------------------------------


@pytest.mark.parametrize("df", [1, 2, 3, 5, 11, 23, 100])
@pytest.mark.parametrize("alpha", [0.05, 0.01, 0.001])
def test_critical_value_against_scipy(df, alpha):
    exact = stats.chi2.ppf(1 - alpha, df)
    rel = abs(chi2_critical(df, alpha) / exact - 1)
    assert rel < 0.035
    if df >= 5:
        assert rel < 0.012


@pytest.mark.parametrize("df", [1, 2, 3, 5, 10, 20])
def test_survival_function_against_scipy(df):
    xs = np.linspace(0.25, 100, 400)
    assert max(abs(chi2_sf(x, df) - stats.chi2.sf(x, df)) for x in xs) < 0.01


def test_degenerate_df():
    assert chi2_critical(0, 0.01) == math.inf
    assert chi2_sf(3.0, 0) == 1.0


def _brute_exact(counts, probs):
    total, k = sum(counts), len(counts)
    expected = [total * p for p in probs]
    obs = pearson_statistic(counts, expected)
    p = 0.0
    for comp in itertools.product(range(total + 1), repeat=k):
        if sum(comp) == total and pearson_statistic(comp, expected) >= obs - 1e-9:
            p += stats.multinomial.pmf(comp, total, probs)
    return p


@given(st.lists(st.integers(0, 8), min_size=2, max_size=3).filter(lambda c: sum(c) > 0))
def test_exact_test_against_brute_force(counts):
    k = len(counts)
    probs = [1 / k] * k
    stat, p, crit = exact_multinomial_test(counts, probs, 0.05)
    assert p == pytest.approx(_brute_exact(counts, probs), abs=1e-9)


def test_exact_critical_value_has_level_alpha():
    counts, probs, alpha = [10, 20, 30], [1 / 3] * 3, 0.01
    _, _, crit = exact_multinomial_test(counts, probs, alpha)
    tail = sum(
        stats.multinomial.pmf(c, 60, probs)
        for c in itertools.product(range(61), repeat=3)
        if sum(c) == 60 and pearson_statistic(c, [20] * 3) >= crit - 1e-9
    )
    assert tail < alpha


def test_chi_square_decisions_agree_with_exact_test():
    rnd = random.Random(1)
    for alpha in (0.05, 0.01, 0.001):
        agree = 0
        for _ in range(150):
            k = rnd.choice([2, 3])
            total = rnd.randint(30, 200)
            tilt = rnd.choice([0, 0, 0.05, 0.1, 0.2])
            q = [1 / k + (tilt if i == 0 else -tilt / (k - 1)) for i in range(k)]
            counts = [0] * k
            for i in rnd.choices(range(k), q, k=total):
                counts[i] += 1
            stat, _, crit = exact_multinomial_test(counts, [1 / k] * k, alpha)
            agree += (stat >= crit) == (stat >= chi2_critical(k - 1, alpha))
        assert agree / 150 >= 0.97


# --- enumeration ----------------------------------------------------------------------


def test_alpha_examples():
    assert enumerate_types(ReductKind.PURE_SET, 4)[1] == 1
    assert enumerate_types(ReductKind.ORDER, 3)[1] == 6
    assert enumerate_types(ReductKind.BETWEENNESS, 3)[1] == 3
    assert enumerate_types(ReductKind.CIRCULAR, 3)[1] == 2
    assert enumerate_types(ReductKind.SEPARATION, 4)[1] == 3


@pytest.mark.parametrize("n", range(2, 7))
def test_alpha_closed_forms(n):
    # orderings modulo the symmetry group each reduct forgets
    f = math.factorial
    assert enumerate_types(ReductKind.PURE_SET, n)[1] == 1
    assert enumerate_types(ReductKind.ORDER, n)[1] == f(n)
    assert enumerate_types(ReductKind.BETWEENNESS, n)[1] == f(n) // 2
    assert enumerate_types(ReductKind.CIRCULAR, n)[1] == (f(n - 1) if n >= 3 else 1)
    assert enumerate_types(ReductKind.SEPARATION, n)[1] == (f(n - 1) // 2 if n >= 4 else 1)


@pytest.mark.parametrize("n", range(0, 7))
def test_alpha_bound(n):
    for kind in ReductKind:
        alpha = enumerate_types(kind, n)[1]
        assert alpha <= math.factorial(n)
        if n >= 2:
            assert (alpha == math.factorial(n)) == (kind is ReductKind.ORDER)


def test_enumeration_bound():
    with pytest.raises(ValueError):
        enumerate_types(ReductKind.ORDER, 8)


# --- frequency tables ------------------------------------------------------------------


def test_frequency_examples(rng):
    t = estimate_frequencies(builtin("pure-set"), N, 3, 100, rng)
    assert list(t.counts.values()) == [100]
    t = estimate_frequencies(builtin("order"), N, 2, 100_000, rng)
    assert len(t.counts) == 2
    assert all(abs(c - 50_000) < 3 * math.sqrt(25_000) for c in t.counts.values())
    t = estimate_frequencies(builtin("unary-split"), N, 1, 100_000, rng)
    assert abs(t.frequency(TypeId("1:1")) - 0.5) < 0.0047


def test_frequency_table_csv_and_merge():
    a = FrequencyTable(2, {TypeId("2:0100"): 3, TypeId("2:0010"): 5}, "order", "normal", 1)
    text = a.to_csv()
    assert text.splitlines()[0] == "type_id,count"
    assert FrequencyTable.from_csv(text).counts == a.counts
    assert a.merge(a).total == 16
    with pytest.raises(ValueError):
        FrequencyTable(2, {})
    with pytest.raises(ValueError):
        FrequencyTable(2, {TypeId("2:0100"): -1, TypeId("2:0010"): 5})


def test_worker_count_does_not_change_results():
    samples = 3 * CHUNK_SIZE + 17
    a = estimate_frequencies(builtin("circular"), N, 4, samples, np.random.default_rng(3), workers=1)
    b = estimate_frequencies(builtin("circular"), N, 4, samples, np.random.default_rng(3), workers=2)
    assert a.counts == b.counts


def test_seed_determinism():
    a = estimate_frequencies(builtin("order"), N, 3, 5000, np.random.default_rng(9))
    b = estimate_frequencies(builtin("order"), N, 3, 5000, np.random.default_rng(9))
    assert a.counts == b.counts


# --- uniformity ----------------------------------------------------------------------------


def test_uniformity_order_passes(rng):
    types, _ = enumerate_types(ReductKind.ORDER, 3)
    r = uniformity(estimate_frequencies(builtin("order"), N, 3, 100_000, rng), types, 0.001)
    assert r.passed and r.params["method"] == "chi-square"


def test_uniformity_concentrated_table_fails():
    types = sorted(enumerate_types(ReductKind.ORDER, 3)[0], key=str)
    r = uniformity(FrequencyTable(3, {types[0]: 600}), types)
    assert not r.passed


def test_uniformity_vacuous_for_one_cell(rng):
    types, _ = enumerate_types(ReductKind.PURE_SET, 4)
    r = uniformity(estimate_frequencies(builtin("pure-set"), N, 4, 50, rng), types)
    assert r.passed and r.params["method"] == "vacuous"


def test_uniformity_stray_type_fails():
    types = enumerate_types(ReductKind.BETWEENNESS, 3)[0]
    counts = {t: 100 for t in types}
    counts[TypeId("3:" + "0" * 27)] = 1
    r = uniformity(FrequencyTable(3, counts), types)
    assert not r.passed and "unexpected_types" in r.params


def test_uniformity_preconditions():
    types = enumerate_types(ReductKind.ORDER, 3)[0]
    with pytest.raises(ValueError, match="undersized"):
        uniformity(FrequencyTable(3, {next(iter(types)): 59}), types)
    with pytest.raises(ValueError):
        uniformity(FrequencyTable(3, {next(iter(types)): 59}), [])


def test_uniformity_small_total_uses_exact_test(rng):
    types, _ = enumerate_types(ReductKind.CIRCULAR, 3)
    r = uniformity(estimate_frequencies(builtin("circular"), N, 3, 150, rng), types)
    assert r.params["method"] == "exact-multinomial"
    assert r.passed


@pytest.mark.parametrize("kind", [k for k in ReductKind])
@pytest.mark.parametrize("W", [SPLIT_03, THREE_PART], ids=["split", "three-part"])
def test_uniformity_survives_reweighting(kind, W, rng):
    n = 4 if kind is ReductKind.SEPARATION else 3
    types, _ = enumerate_types(kind, n)
    table = estimate_frequencies(builtin(kind.value), reweight(N, W), n, 30_000, rng)
    assert uniformity(table, types, 0.001).passed


# --- exchangeability ------------------------------------------------------------------------


class DriftingOrder:
    """Order prefixes whose i-th real is shifted by i/2: not exchangeable."""

    name = "drifting-order"
    sig = builtin("order").sig
    measure_descriptor = "normal+drift"

    def diagrams(self, n, count, rng):
        return induce_batch(builtin("order"), sample_reals(N, n, count, rng) + 0.5 * np.arange(n))

    def sample(self, n, rng):
        raise NotImplementedError


def test_exchangeability_order_passes(rng):
    r = exchangeability(builtin("order"), N, 3, [(0, 1, 2), (2, 0, 1), (5, 1, 3)], 100_000, rng)
    assert r.passed and r.params["prefix_size"] == 6


def test_exchangeability_detects_biased_sampler(rng):
    r = exchangeability(DriftingOrder(), None, 2, [(0, 1), (1, 0)], 20_000, rng)
    assert not r.passed


def test_exchangeability_single_tuple_vacuous(rng):
    assert exchangeability(builtin("order"), N, 2, [(0, 1)], 1000, rng).passed


def test_exchangeability_rejects_malformed_tuples(rng):
    with pytest.raises(ValueError):
        exchangeability(builtin("order"), N, 2, [(0, 0)], 100, rng)
    with pytest.raises(ValueError):
        exchangeability(builtin("order"), N, 2, [(0, 1, 2)], 100, rng)


@given(structures(max_size=5), st.data())
def test_subdiagram_columns_read_induced_substructure(M, data):
    k = data.draw(st.integers(0, M.size))
    idx = data.draw(st.permutations(range(M.size)))[:k]
    bits = np.array([b == "1" for b in labeled_type(M).key.split(":", 1)[1].replace("/", "")], dtype=bool)
    sub = bits[subdiagram_columns(M.sig, M.size, idx)]
    expected = labeled_type(induced_substructure(M, idx)).key.split(":", 1)[1].replace("/", "")
    assert "".join("1" if b else "0" for b in sub) == expected


# --- distinguishing -------------------------------------------------------------------------


def test_distinguish_unary_split(rng):
    r = distinguish(builtin("unary-split"), N, SPLIT_03, SPLIT_05, 1, 10_000, rng)
    assert r.params["distinguishable"] and r.passed


def test_identical_weights_not_distinguishable(rng):
    r = distinguish(builtin("unary-split"), N, SPLIT_03, SPLIT_03, 1, 10_000, rng)
    assert not r.params["distinguishable"]


def test_order_weights_not_distinguishable(rng):
    r = distinguish(builtin("order"), N, SPLIT_03, THREE_PART, 3, 100_000, rng)
    assert not r.params["distinguishable"]


def test_edge_densities(rng):
    r = edge_densities(0.3, 0.5, 50, 200, rng)
    assert r.params["distinguishable"]
    assert not edge_densities(0.4, 0.4, 30, 200, rng).params["distinguishable"]


# --- high homogeneity -------------------------------------------------------------------


@pytest.mark.parametrize("kind", [k.value for k in ReductKind])
def test_reducts_highly_homogeneous(kind, rng):
    r = check_high_homogeneity_sampled(builtin(kind), N, 8, 3, 100, rng)
    assert r.passed and r.params["counterexample"] is None


def test_er_graph_not_highly_homogeneous(rng):
    r = check_high_homogeneity_sampled(ERSampler(0.5), None, 10, 2, 20, rng)
    assert not r.passed
    cx = r.params["counterexample"]
    assert len(set(cx["types"])) == 2


def test_unary_split_not_highly_homogeneous(rng):
    assert not check_high_homogeneity_sampled(builtin("unary-split"), N, 8, 1, 20, rng).passed


def test_hh_bounds(rng):
    with pytest.raises(ValueError):
        check_high_homogeneity_sampled(builtin("order"), N, 3, 4, 1, rng)
    with pytest.raises(ValueError):
        check_high_homogeneity_sampled(builtin("order"), N, 13, 2, 1, rng)


# --- reports ------------------------------------------------------------------------------


def test_report_json_is_strict():
    r = TestReport("x", math.inf, 0.0, "fail", {"a": float("nan"), "b": np.int64(3)})
    text = json.dumps(r.to_json(), allow_nan=False)
    data = json.loads(text)
    assert data["statistic"] is None and data["params"] == {"a": None, "b": 3}
