"""Type frequencies of sampled prefixes and the hypothesis tests run on them.

Chi-square critical values and p-values use the Wilson-Hilferty cube-root
normal approximation; small uniformity tables (total <= 200) are decided
with an exact multinomial enumeration instead.

Monte Carlo work is cut into fixed-size chunks, each driven by its own child
stream spawned from the caller's generator, so counts do not depend on how
many workers execute the chunks.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Iterable, Sequence

import numpy as np

from .borel import as_sampler, diagram_to_type, index_tuples
from .finstruct import Signature, TypeId, labeled_type, unlabeled_type, structure_from_type
from .measures import SampleableMeasure, Weight, reweight
from .reducts import ReductKind, induce_reduct

DEFAULT_SIGNIFICANCE = 0.001
CHUNK_SIZE = 8192
MAX_ENUMERATE_N = 7
EXACT_TOTAL_LIMIT = 200
EXACT_OUTCOME_LIMIT = 250_000

_STD_NORMAL = NormalDist()


# ---------------------------------------------------------------------------
# chi-square machinery


def chi2_critical(df: int, alpha: float) -> float:
    """Upper ``alpha`` quantile of chi-square(df), Wilson-Hilferty."""
    if df <= 0:
        return math.inf
    z = _STD_NORMAL.inv_cdf(1.0 - alpha)
    c = 2.0 / (9.0 * df)
    return df * max(0.0, 1.0 - c + z * math.sqrt(c)) ** 3


def chi2_sf(x: float, df: int) -> float:
    """Survival function of chi-square(df), Wilson-Hilferty."""
    if df <= 0:
        return 1.0
    if x <= 0:
        return 1.0
    c = 2.0 / (9.0 * df)
    z = ((x / df) ** (1.0 / 3.0) - (1.0 - c)) / math.sqrt(c)
    return 1.0 - _STD_NORMAL.cdf(z)


def pearson_statistic(observed: Sequence[float], expected: Sequence[float]) -> float:
    return math.fsum((o - e) ** 2 / e for o, e in zip(observed, expected) if e > 0)


def _compositions(total: int, k: int):
    if k == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, k - 1):
            yield (first,) + rest


def exact_multinomial_test(counts: Sequence[int], probs: Sequence[float], alpha: float):
    """Exact goodness-of-fit with the Pearson statistic as ordering.

    Returns ``(statistic, p_value, critical)`` where ``p_value`` is
    P(X^2 >= observed) under the null and ``critical`` is the least
    attainable X^2 value whose upper tail has mass below ``alpha`` (reject
    iff statistic >= critical).
    """
    counts = [int(c) for c in counts]
    total, k = sum(counts), len(counts)
    if math.comb(total + k - 1, k - 1) > EXACT_OUTCOME_LIMIT:
        raise ValueError("table too large for exact enumeration")
    expected = [total * p for p in probs]
    log_p = [math.log(p) if p > 0 else -math.inf for p in probs]
    lg_total = math.lgamma(total + 1)
    outcomes = []
    for comp in _compositions(total, k):
        lp = lg_total
        for c, l in zip(comp, log_p):
            if c:
                if l == -math.inf:
                    lp = -math.inf
                    break
                lp += c * l - math.lgamma(c + 1)
        if lp == -math.inf:
            continue
        outcomes.append((pearson_statistic(comp, expected), math.exp(lp)))
    stat = pearson_statistic(counts, expected)
    eps = 1e-9 * max(1.0, stat)
    p_value = min(1.0, math.fsum(p for s, p in outcomes if s >= stat - eps))
    outcomes.sort(key=lambda sp: sp[0], reverse=True)
    critical, tail = math.inf, 0.0
    i = 0
    while i < len(outcomes):
        s = outcomes[i][0]
        group = 0.0
        while i < len(outcomes) and outcomes[i][0] >= s - 1e-9 * max(1.0, s):
            group += outcomes[i][1]
            i += 1
        if tail + group < alpha:
            tail += group
            critical = s
        else:
            break
    return stat, p_value, critical


# ---------------------------------------------------------------------------
# reports and tables


@dataclass
class TestReport:
    __test__ = False  # not a pytest class

    test: str
    statistic: float
    threshold: float
    decision: str
    params: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.decision == "pass"

    @property
    def p_value(self) -> float | None:
        return self.params.get("p_value")

    def to_json(self) -> dict:
        return {
            "test": self.test,
            "statistic": _finite_or_none(self.statistic),
            "threshold": _finite_or_none(self.threshold),
            "decision": self.decision,
            "params": {k: _jsonable(v) for k, v in self.params.items()},
        }

    def line(self) -> str:
        return f"{self.decision.upper():4s} {self.test}: statistic={self.statistic:.4g} threshold={self.threshold:.4g}"


def _finite_or_none(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _jsonable(v):
    if isinstance(v, float):
        return _finite_or_none(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return _finite_or_none(float(v))
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, TypeId):
        return str(v)
    return v


def _report(test: str, statistic: float, threshold: float, passed_if_below: bool, **params) -> TestReport:
    if passed_if_below:
        ok = statistic < threshold
    else:
        ok = statistic >= threshold
    return TestReport(test, float(statistic), float(threshold), "pass" if ok else "fail", params)


@dataclass
class FrequencyTable:
    n: int
    counts: dict[TypeId, int]
    structure: str = ""
    measure: str = ""
    seed: int | None = None

    def __post_init__(self):
        if any(c < 0 for c in self.counts.values()):
            raise ValueError("counts must be nonnegative")
        if self.total < 1:
            raise ValueError("a frequency table needs at least one sample")

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def frequency(self, type_id: TypeId) -> float:
        return self.counts.get(type_id, 0) / self.total

    def merge(self, other: "FrequencyTable") -> "FrequencyTable":
        if other.n != self.n:
            raise ValueError("cannot merge tables for different prefix sizes")
        merged = Counter(self.counts)
        merged.update(other.counts)
        return FrequencyTable(self.n, dict(merged), self.structure, self.measure, self.seed)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["type_id", "count"])
        for t in sorted(self.counts, key=str):
            w.writerow([str(t), self.counts[t]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, **meta) -> "FrequencyTable":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["type_id", "count"]:
            raise ValueError("expected header 'type_id,count'")
        counts = {TypeId.parse(t): int(c) for t, c in rows[1:] if t}
        sizes = {t.size for t in counts}
        if len(sizes) != 1:
            raise ValueError("type ids of mixed sizes")
        return cls(sizes.pop(), counts, **meta)


# ---------------------------------------------------------------------------
# enumeration


def enumerate_types(kind: ReductKind, n: int) -> tuple[frozenset, int]:
    """Distinct labeled types induced by all orderings of n reals."""
    if not 0 <= n <= MAX_ENUMERATE_N:
        raise ValueError(f"n must lie in 0..{MAX_ENUMERATE_N}, got {n}")
    types = frozenset(
        labeled_type(induce_reduct(kind, p)) for p in itertools.permutations(range(1, n + 1))
    )
    return types, len(types)


# ---------------------------------------------------------------------------
# chunked Monte Carlo


def _chunk_sizes(samples: int) -> list[int]:
    full, rest = divmod(samples, CHUNK_SIZE)
    return [CHUNK_SIZE] * full + ([rest] if rest else [])


def _run_chunks(fn, sampler, samples: int, rng: np.random.Generator, workers: int, *args):
    sizes = _chunk_sizes(samples)
    streams = rng.spawn(len(sizes))
    jobs = [(sampler, size, stream) + args for size, stream in zip(sizes, streams)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, *zip(*jobs)))
    return [fn(*job) for job in jobs]


def _count_chunk(sampler, size, stream, n):
    D = sampler.diagrams(n, size, stream)
    return _count_rows(sampler.sig, n, D)


def _count_rows(sig: Signature, n: int, D: np.ndarray) -> Counter:
    if D.shape[1] == 0:
        return Counter({diagram_to_type(sig, n, D[0] if len(D) else np.zeros(0, bool)): D.shape[0]})
    packed = np.ascontiguousarray(np.packbits(D, axis=1))
    keys = packed.view(np.dtype((np.void, packed.shape[1]))).ravel()
    _, first, counts = np.unique(keys, return_index=True, return_counts=True)
    return Counter({diagram_to_type(sig, n, D[i]): int(c) for i, c in zip(first, counts)})


def estimate_frequencies(
    P,
    m: SampleableMeasure | None,
    n: int,
    samples: int,
    rng: np.random.Generator,
    workers: int = 1,
    seed: int | None = None,
) -> FrequencyTable:
    if samples < 1:
        raise ValueError("samples must be >= 1")
    sampler = as_sampler(P, m)
    total: Counter = Counter()
    for c in _run_chunks(_count_chunk, sampler, samples, rng, workers, n):
        total.update(c)
    return FrequencyTable(n, dict(total), sampler.name, sampler.measure_descriptor, seed)


# ---------------------------------------------------------------------------
# tests


def test_uniformity(
    table: FrequencyTable, expected_types: Iterable[TypeId], significance: float = DEFAULT_SIGNIFICANCE
) -> TestReport:
    """Goodness of fit of the labeled-type counts to 1/alpha_n on ``expected_types``."""
    expected = sorted(set(expected_types), key=str)
    k = len(expected)
    if k == 0:
        raise ValueError("expected_types must be nonempty")
    if table.total < 10 * k:
        raise ValueError(f"undersized sample: {table.total} < 10 * {k}")
    params = dict(n=table.n, samples=table.total, cells=k, significance=significance,
                  structure=table.structure, measure=table.measure, seed=table.seed)
    stray = {str(t): c for t, c in table.counts.items() if c and t not in set(expected)}
    if stray:
        return TestReport("uniformity", math.inf, 0.0, "fail", dict(params, unexpected_types=stray, method="support"))
    counts = [table.counts.get(t, 0) for t in expected]
    if k == 1:
        return _report("uniformity", 0.0, math.inf, True, **params, method="vacuous", p_value=1.0)
    probs = [1.0 / k] * k
    if table.total <= EXACT_TOTAL_LIMIT and math.comb(table.total + k - 1, k - 1) <= EXACT_OUTCOME_LIMIT:
        stat, p, crit = exact_multinomial_test(counts, probs, significance)
        return _report("uniformity", stat, crit, True, **params, method="exact-multinomial", p_value=p)
    stat = pearson_statistic(counts, [table.total / k] * k)
    return _report(
        "uniformity", stat, chi2_critical(k - 1, significance), True,
        **params, method="chi-square", df=k - 1, p_value=chi2_sf(stat, k - 1),
    )


def homogeneity_test(name: str, rows: Sequence[dict], significance: float, **params) -> TestReport:
    """Pearson chi-square test that several count tables share one distribution."""
    params["significance"] = significance
    columns = sorted({t for r in rows for t, c in r.items() if c}, key=str)
    if len(rows) < 2 or len(columns) < 2:
        return _report(name, 0.0, math.inf, True, **params, df=0, p_value=1.0, method="vacuous")
    obs = np.array([[r.get(t, 0) for t in columns] for r in rows], dtype=float)
    row_tot, col_tot, N = obs.sum(axis=1), obs.sum(axis=0), obs.sum()
    exp = np.outer(row_tot, col_tot) / N
    stat = float(((obs - exp) ** 2 / exp).sum())
    df = (len(rows) - 1) * (len(columns) - 1)
    return _report(name, stat, chi2_critical(df, significance), True,
                   **params, df=df, p_value=chi2_sf(stat, df), method="chi-square")


def subdiagram_columns(sig: Signature, N: int, indices: Sequence[int]) -> np.ndarray:
    """Columns of a size-N diagram holding the diagram of the substructure on ``indices``."""
    cols, offset = [], 0
    k = len(indices)
    ind = np.asarray(indices, dtype=np.intp)
    for arity in sig.arities:
        sub = index_tuples(k, arity)
        full = ind[sub]
        weights = N ** np.arange(arity - 1, -1, -1)
        cols.append(offset + full @ weights)
        offset += N**arity
    return np.concatenate(cols) if cols else np.zeros(0, dtype=np.intp)


def _exchangeability_chunk(sampler, size, stream, N, n, tuples):
    D = sampler.diagrams(N, size, stream)
    return [_count_rows(sampler.sig, n, D[:, subdiagram_columns(sampler.sig, N, t)]) for t in tuples]


def test_exchangeability(
    P,
    m: SampleableMeasure | None,
    n: int,
    tuples: Sequence[Sequence[int]],
    samples: int,
    rng: np.random.Generator,
    significance: float = DEFAULT_SIGNIFICANCE,
    workers: int = 1,
) -> TestReport:
    """Type read off at each index tuple should have the same law for every tuple."""
    tuples = [tuple(int(i) for i in t) for t in tuples]
    if not tuples:
        raise ValueError("need at least one index tuple")
    for t in tuples:
        if len(t) != n or len(set(t)) != n or min(t, default=0) < 0:
            raise ValueError(f"index tuple {t} must have {n} distinct nonnegative entries")
    sampler = as_sampler(P, m)
    N = max(max(t, default=-1) for t in tuples) + 1
    per_tuple = [Counter() for _ in tuples]
    for chunk in _run_chunks(_exchangeability_chunk, sampler, samples, rng, workers, N, n, tuples):
        for acc, c in zip(per_tuple, chunk):
            acc.update(c)
    return homogeneity_test(
        "exchangeability", per_tuple, significance,
        structure=sampler.name, measure=sampler.measure_descriptor, n=n, prefix_size=N,
        tuples=[list(t) for t in tuples], samples=samples,
    )


def test_distinguish(
    P,
    m: SampleableMeasure,
    W1: Weight,
    W2: Weight,
    n: int,
    samples: int,
    rng: np.random.Generator,
    significance: float = DEFAULT_SIGNIFICANCE,
    workers: int = 1,
) -> TestReport:
    """Two-sample chi-square on labeled types under ``m^W1`` vs ``m^W2``.

    ``decision == "pass"`` means the two measures were told apart.
    """
    m1, m2 = reweight(m, W1), reweight(m, W2)
    r1, r2 = rng.spawn(2)
    t1 = estimate_frequencies(P, m1, n, samples, r1, workers)
    t2 = estimate_frequencies(P, m2, n, samples, r2, workers)
    return _two_sample("distinguish", t1.counts, t2.counts, significance,
                       structure=t1.structure, n=n, samples=samples,
                       measure_1=m1.descriptor, measure_2=m2.descriptor)


def _two_sample(name, c1, c2, significance, **params) -> TestReport:
    h = homogeneity_test(name, [c1, c2], significance, **params)
    distinguishable = h.statistic >= h.threshold
    h.params["distinguishable"] = distinguishable
    h.decision = "pass" if distinguishable else "fail"
    return h


def edge_counts(p: float, n: int, samples: int, rng: np.random.Generator) -> tuple[int, int]:
    """(edges, vertex pairs) summed over ``samples`` draws of G(n, p)."""
    from .borel import ERSampler

    sampler = ERSampler(p)
    pairs = n * (n - 1) // 2
    edges = 0
    for size, stream in zip(_chunk_sizes(samples), rng.spawn(len(_chunk_sizes(samples)))):
        A = sampler.adjacency(n, size, stream)
        edges += int(A.sum()) // 2
    return edges, pairs * samples


def test_edge_densities(
    p1: float, p2: float, n: int, samples: int, rng: np.random.Generator,
    significance: float = DEFAULT_SIGNIFICANCE,
) -> TestReport:
    """Two-sample chi-square on edge vs non-edge counts of G(n, p1) and G(n, p2)."""
    r1, r2 = rng.spawn(2)
    e1, tot1 = edge_counts(p1, n, samples, r1)
    e2, tot2 = edge_counts(p2, n, samples, r2)
    return _two_sample(
        "er-distinguish", {"edge": e1, "none": tot1 - e1}, {"edge": e2, "none": tot2 - e2}, significance,
        p1=p1, p2=p2, n=n, samples=samples, density_1=e1 / tot1, density_2=e2 / tot2,
    )


MAX_HH_PREFIX = 12
MAX_HH_K = 8


def check_high_homogeneity_sampled(
    P,
    m: SampleableMeasure | None,
    n: int,
    k: int,
    trials: int,
    rng: np.random.Generator,
) -> TestReport:
    """Every sampled prefix should have pairwise isomorphic k-element substructures."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    if n > MAX_HH_PREFIX or k > MAX_HH_K:
        raise ValueError(f"bounds exceeded: n <= {MAX_HH_PREFIX}, k <= {MAX_HH_K}")
    sampler = as_sampler(P, m)
    sig = sampler.sig
    subsets = list(itertools.combinations(range(n), k))
    columns = [subdiagram_columns(sig, n, s) for s in subsets]
    unlabeled_cache: dict[TypeId, TypeId] = {}

    def unlabeled(t: TypeId) -> TypeId:
        if t not in unlabeled_cache:
            unlabeled_cache[t] = unlabeled_type(structure_from_type(sig, t))
        return unlabeled_cache[t]

    D = sampler.diagrams(n, trials, rng)
    failures, counterexample = 0, None
    for trial, row in enumerate(D):
        seen: dict[TypeId, tuple] = {}
        for s, cols in zip(subsets, columns):
            u = unlabeled(diagram_to_type(sig, k, row[cols]))
            seen.setdefault(u, s)
            if len(seen) > 1:
                break
        if len(seen) > 1:
            failures += 1
            if counterexample is None:
                (u1, s1), (u2, s2) = list(seen.items())[:2]
                counterexample = {"trial": trial, "subsets": [list(s1), list(s2)], "types": [str(u1), str(u2)]}
    return _report("high-homogeneity", failures, 1, True,
                   structure=sampler.name, measure=sampler.measure_descriptor,
                   n=n, k=k, trials=trials, failing_trials=failures, counterexample=counterexample)
