"""Exact checks of the polynomial identities behind the reweighting argument.

For a symmetric coefficient table ``a_s`` (s ranging over {0..l}^n) the
weighted sum

    spade(lambda) = sum_s a_s * lambda_{s(0)} * ... * lambda_{s(n-1)}

is the probability that an n-tuple drawn from a reweighted measure lands in
an S_n-invariant event, when ``lambda_i`` is the mass given to the i-th part.
Eliminating ``lambda_l = 1 - sum_{i<l} lambda_i`` turns it into a polynomial
P in l variables; its coefficients are computed two ways (closed-form sum and
full expansion) and must agree.  All arithmetic is ``Fraction``.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
import random
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .measures import IntervalUnion, SampleableMeasure, Weight, _as_union, reweight

MAX_EXPAND_N = 4
MAX_EXPAND_L = 3


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


@dataclass(frozen=True)
class SymCoeffTable:
    """Coefficients ``a_s`` for every ``s`` in {0..l}^n, invariant under reordering ``s``."""

    n: int
    l: int
    a: Mapping[tuple[int, ...], Fraction]

    def __post_init__(self):
        if self.n < 0 or self.l < 0:
            raise ValueError("n and l must be nonnegative")
        a = {tuple(int(x) for x in s): _frac(v) for s, v in dict(self.a).items()}
        for s in a:
            if len(s) != self.n or any(not 0 <= x <= self.l for x in s):
                raise ValueError(f"index {s} outside {{0..{self.l}}}^{self.n}")
        missing = [s for s in itertools.product(range(self.l + 1), repeat=self.n) if s not in a]
        if missing:
            raise ValueError(f"table incomplete; first missing index {missing[0]}")
        for s, v in a.items():
            if v < 0:
                raise ValueError(f"a_{s} = {v} is negative")
        object.__setattr__(self, "a", a)

    @classmethod
    def from_function(cls, n: int, l: int, f) -> "SymCoeffTable":
        return cls(n, l, {s: f(s) for s in itertools.product(range(l + 1), repeat=n)})

    @classmethod
    def from_multisets(cls, n: int, l: int, values: Mapping[tuple[int, ...], object]) -> "SymCoeffTable":
        """Build a symmetric table from values on sorted index tuples."""
        return cls.from_function(n, l, lambda s: values[tuple(sorted(s))])

    @classmethod
    def constant(cls, n: int, l: int, c) -> "SymCoeffTable":
        return cls.from_function(n, l, lambda s: c)

    def __getitem__(self, s) -> Fraction:
        return self.a[tuple(s)]

    @property
    def a_star(self) -> Fraction:
        """Coefficient at the constant sequence (l, ..., l)."""
        return self.a[(self.l,) * self.n]

    def symmetry_violation(self):
        """First pair ``(s, t)`` with t a rearrangement of s and a_s != a_t, else None."""
        for s, v in self.a.items():
            t = tuple(sorted(s))
            if self.a[t] != v:
                return s, t
        return None

    def is_symmetric(self) -> bool:
        return self.symmetry_violation() is None

    def is_constant(self) -> bool:
        return len(set(self.a.values())) <= 1

    def to_json(self) -> dict:
        if self.l > 9:
            raise ValueError("JSON keys use one digit per entry; l must be <= 9")
        return {
            "n": self.n,
            "l": self.l,
            "a": {"".join(map(str, s)): str(v) for s, v in sorted(self.a.items())},
        }

    @classmethod
    def from_json(cls, data: dict) -> "SymCoeffTable":
        n, l = int(data["n"]), int(data["l"])
        a = {}
        for key, v in data["a"].items():
            if len(key) != n or not key.isdigit():
                raise ValueError(f"bad table key {key!r} for n={n}")
            a[tuple(int(ch) for ch in key)] = _frac(v)
        return cls(n, l, a)


@dataclass(frozen=True)
class LambdaPoint:
    values: tuple[Fraction, ...]

    def __post_init__(self):
        vals = tuple(_frac(v) for v in self.values)
        if not vals:
            raise ValueError("need at least one coordinate")
        if any(v <= 0 for v in vals):
            raise ValueError(f"coordinates must be positive: {vals}")
        if sum(vals) != 1:
            raise ValueError(f"coordinates sum to {sum(vals)}, not 1")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    @classmethod
    def from_weight(cls, W: Weight) -> "LambdaPoint":
        return cls(tuple(_frac(u) for u in W.masses))


@dataclass(frozen=True)
class ExponentVector:
    """Exponents ``k_0..k_{l-1}`` of a monomial in P, for sequences of length ``n``."""

    k: tuple[int, ...]
    n: int | None = None

    def __post_init__(self):
        k = tuple(int(x) for x in self.k)
        if any(x < 0 for x in k):
            raise ValueError("exponents must be nonnegative")
        n = sum(k) if self.n is None else int(self.n)
        if sum(k) > n:
            raise ValueError(f"sum of exponents {sum(k)} exceeds n={n}")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "n", n)

    @property
    def total(self) -> int:
        return sum(self.k)

    @property
    def l(self) -> int:
        return len(self.k)

    @property
    def multinomial(self) -> int:
        """n! / (k_0! ... k_{l-1}! (n-k)!)"""
        out = math.factorial(self.n) // math.factorial(self.n - self.total)
        for x in self.k:
            out //= math.factorial(x)
        return out


def gamma_sequence(t: Sequence[int], n: int, l: int) -> tuple[int, ...]:
    """Non-decreasing sequence: t_0 zeros, t_1 ones, ..., padded with l's to length n."""
    seq = [i for i, c in enumerate(t) for _ in range(c)]
    if len(seq) > n:
        raise ValueError("counts exceed sequence length")
    return tuple(seq) + (l,) * (n - len(seq))


def _check_dims(A: SymCoeffTable, lam: LambdaPoint):
    if len(lam) != A.l + 1:
        raise ValueError(f"point has {len(lam)} coordinates; table needs l + 1 = {A.l + 1}")


# ---------------------------------------------------------------------------
# spade polynomial


def eval_spade(A: SymCoeffTable, lam: LambdaPoint) -> Fraction:
    _check_dims(A, lam)
    bad = A.symmetry_violation()
    if bad is not None:
        raise ValueError(f"table is not symmetric: a{bad[0]} != a{bad[1]}")
    # group the sum by multiset of entries; symmetry makes a_s constant on each group
    total = Fraction(0)
    for combo in itertools.combinations_with_replacement(range(A.l + 1), A.n):
        mult = Counter(combo)
        count = math.factorial(A.n)
        term = Fraction(1)
        for i, c in mult.items():
            count //= math.factorial(c)
            term *= lam[i] ** c
        total += count * A.a[combo] * term
    return total


def eval_spade_brute(A: SymCoeffTable, lam: LambdaPoint) -> Fraction:
    """Term-by-term sum over all (l+1)^n sequences."""
    _check_dims(A, lam)
    total = Fraction(0)
    for s, v in A.a.items():
        term = v
        for i in s:
            term *= lam[i]
        total += term
    return total


def simplex_grid(l: int, resolution: int) -> list[LambdaPoint]:
    """Points (j_0/r, ..., j_l/r) with positive integer j summing to r."""
    if resolution < l + 1:
        return []
    pts = []
    for cuts in itertools.combinations(range(1, resolution), l):
        bounds = (0,) + cuts + (resolution,)
        pts.append(LambdaPoint(tuple(Fraction(b - a, resolution) for a, b in zip(bounds, bounds[1:]))))
    return pts


def spread_check(A: SymCoeffTable, grid_resolution: int) -> int:
    """Number of distinct values of spade over the rational simplex grid."""
    bad = A.symmetry_violation()
    if bad is not None:
        raise ValueError(f"table is not symmetric: a{bad[0]} != a{bad[1]}")
    if A.is_constant():
        # spade is then constant: sum of all monomials is (sum lambda)^n = 1
        return 1
    return len({eval_spade(A, p) for p in simplex_grid(A.l, grid_resolution)})


def nonconstancy_certificate(A: SymCoeffTable, grid_resolution: int = 10):
    """Two grid points where spade differs, or None."""
    first = None
    for p in simplex_grid(A.l, grid_resolution):
        v = eval_spade(A, p)
        if first is None:
            first = (p, v)
        elif v != first[1]:
            return first[0], p
    return None


# ---------------------------------------------------------------------------
# coefficients of P


def binomial_cancellation(e: ExponentVector) -> int:
    """sum over t <= k of prod C(k_i, t_i) * (-1)^(k - sum t); zero whenever k >= 1."""
    if e.total == 0:
        raise ValueError("k = 0 gives 1; the cancellation needs k >= 1")
    total = 0
    for t in itertools.product(*(range(x + 1) for x in e.k)):
        term = (-1) ** (e.total - sum(t))
        for ki, ti in zip(e.k, t):
            term *= math.comb(ki, ti)
        total += term
    return total


def beta_formula(A: SymCoeffTable, e: ExponentVector) -> Fraction:
    """Coefficient of prod lambda_i^{k_i} in P via the closed-form alternating sum.

    This is the raw coefficient, multinomial factor included; see
    ``beta_normalized`` for the value with that factor divided out.
    """
    if e.l != A.l or e.n != A.n:
        raise ValueError(f"exponent vector (l={e.l}, n={e.n}) does not match table (l={A.l}, n={A.n})")
    total = Fraction(0)
    for t in itertools.product(*(range(x + 1) for x in e.k)):
        term = A.a[gamma_sequence(t, A.n, A.l)] * (-1) ** (e.total - sum(t))
        for ki, ti in zip(e.k, t):
            term *= math.comb(ki, ti)
        total += term
    return e.multinomial * total


def beta_normalized(A: SymCoeffTable, e: ExponentVector) -> Fraction:
    """``beta_formula`` divided by n!/(k_0!...k_{l-1}!(n-k)!).

    When every a_t with fewer than k entries below l equals a*, this is
    exactly ``a_s - a*`` for s = gamma_sequence(k).
    """
    return beta_formula(A, e) / e.multinomial


class Poly:
    """Sparse multivariate polynomial with Fraction coefficients.

    ``terms`` maps exponent tuples to coefficients; zero coefficients are dropped.
    """

    def __init__(self, nvars: int, terms: Mapping[tuple[int, ...], Fraction] | None = None):
        self.nvars = nvars
        self.terms = {k: Fraction(v) for k, v in (terms or {}).items() if v != 0}

    @classmethod
    def const(cls, nvars, c) -> "Poly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars, i) -> "Poly":
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): 1})

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return Poly(self.nvars, out)

    def __sub__(self, other: "Poly") -> "Poly":
        return self + other.scale(-1)

    def scale(self, c) -> "Poly":
        return Poly(self.nvars, {k: v * c for k, v in self.terms.items()})

    def __mul__(self, other: "Poly") -> "Poly":
        out: dict = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                out[k] = out.get(k, 0) + v1 * v2
        return Poly(self.nvars, out)

    def coeff(self, exps: Sequence[int]) -> Fraction:
        return self.terms.get(tuple(exps), Fraction(0))

    def is_constant(self) -> bool:
        return all(not any(k) for k in self.terms)

    def __eq__(self, other):
        return isinstance(other, Poly) and self.nvars == other.nvars and self.terms == other.terms

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for k, v in sorted(self.terms.items(), reverse=True):
            mono = "*".join(f"x{i}^{e}" if e > 1 else f"x{i}" for i, e in enumerate(k) if e)
            parts.append(f"{v}*{mono}" if mono else str(v))
        return " + ".join(parts)


def substituted_polynomial(A: SymCoeffTable) -> Poly:
    """P(lambda_0..lambda_{l-1}) = spade with lambda_l replaced by 1 - sum of the others."""
    if A.n > MAX_EXPAND_N or A.l > MAX_EXPAND_L:
        raise ValueError(f"expansion bound exceeded (n <= {MAX_EXPAND_N}, l <= {MAX_EXPAND_L})")
    cached = _expand(A.n, A.l, tuple(sorted(A.a.items())))
    return Poly(cached.nvars, cached.terms)


@lru_cache(maxsize=512)
def _expand(n: int, l: int, items: tuple) -> Poly:
    nv = l
    factors = [Poly.var(nv, i) for i in range(nv)]
    last = Poly.const(nv, 1)
    for f in factors:
        last = last - f
    factors.append(last)
    # products of factors only depend on which factors appear (multiplication commutes);
    # every one of the (l+1)^n terms is still expanded and added separately
    products: dict[tuple[int, ...], Poly] = {}
    total: dict[tuple[int, ...], Fraction] = {}
    for s, v in items:
        if v == 0:
            continue
        key = tuple(sorted(s))
        if key not in products:
            prod = Poly.const(nv, 1)
            for i in key:
                prod = prod * factors[i]
            products[key] = prod
        for mono, c in products[key].terms.items():
            total[mono] = total.get(mono, 0) + v * c
    return Poly(nv, total)


def beta_expand(A: SymCoeffTable, e: ExponentVector) -> Fraction:
    """Coefficient of prod lambda_i^{k_i} read off the fully expanded P."""
    if e.l != A.l or e.n != A.n:
        raise ValueError(f"exponent vector (l={e.l}, n={e.n}) does not match table (l={A.l}, n={A.n})")
    return substituted_polynomial(A).coeff(e.k)


# ---------------------------------------------------------------------------
# events and coefficient tables from a measure


class EventKind(enum.Enum):
    """S_n-invariant events that split into finitely many boxes over any partition."""

    SAME_SIGN = "same-sign"  # all coordinates < 0, or all >= 0 (xy > 0 up to a null set)
    SAME_CELL = "same-cell"  # all coordinates in one part of the partition
    ALL_NONNEGATIVE = "all-nonnegative"  # every coordinate >= 0

    @classmethod
    def from_name(cls, name: str) -> "EventKind":
        for kind in cls:
            if kind.value == name:
                return kind
        raise ValueError(f"unknown event {name!r}")


_NEG = IntervalUnion.of(("-inf", 0.0))
_NONNEG = IntervalUnion.of((0.0, "inf"))


def event_boxes(event: EventKind, n: int, parts: Sequence[IntervalUnion]) -> list[list[IntervalUnion]]:
    """Disjoint boxes (one interval union per coordinate) whose union is the event."""
    if event is EventKind.SAME_SIGN:
        return [[_NEG] * n, [_NONNEG] * n]
    if event is EventKind.SAME_CELL:
        return [[p] * n for p in parts]
    if event is EventKind.ALL_NONNEGATIVE:
        return [[_NONNEG] * n]
    raise ValueError(f"event {event} is not box-decomposable")


def event_contains(event: EventKind, X: np.ndarray, parts: Sequence[IntervalUnion]) -> np.ndarray:
    """Membership of each row of ``X`` (shape (S, n)) in the event."""
    X = np.asarray(X, dtype=float)
    if event is EventKind.SAME_SIGN:
        return (X < 0).all(axis=1) | (X >= 0).all(axis=1)
    if event is EventKind.SAME_CELL:
        out = np.zeros(X.shape[0], dtype=bool)
        for p in parts:
            out |= p.contains(X).all(axis=1)
        return out
    if event is EventKind.ALL_NONNEGATIVE:
        return (X >= 0).all(axis=1)
    raise ValueError(f"unknown event {event}")


def cmeas_table(m: SampleableMeasure, parts: Sequence, event: EventKind, n: int) -> SymCoeffTable:
    """``a_s = m^n(A & prod Y_s(i)) / m^n(prod Y_s(i))`` for the partition ``parts``.

    Each a_s is computed once per multiset of s (product over sorted
    coordinates) and copied to its rearrangements, so symmetry is exact.
    """
    parts = [_as_union(p) for p in parts]
    if not parts:
        raise ValueError("need at least one part")
    masses = [m.interval_prob(p) for p in parts]
    for p, mass in zip(parts, masses):
        if not mass > 0:
            raise ValueError(f"part {p} has zero mass under {m.descriptor}")
    boxes = event_boxes(event, n, parts)
    l = len(parts) - 1
    values = {}
    for combo in itertools.combinations_with_replacement(range(l + 1), n):
        den = math.prod(masses[i] for i in combo)
        num = math.fsum(
            math.prod(m.interval_prob(parts[i].intersect(box[c])) for c, i in enumerate(combo))
            for box in boxes
        )
        # exact 0 / 1 when the box product is disjoint from / inside the event
        if num == 0:
            values[combo] = Fraction(0)
        elif num == den:
            values[combo] = Fraction(1)
        else:
            values[combo] = Fraction(num) / Fraction(den)
    table = SymCoeffTable.from_multisets(n, l, values)
    assert table.is_symmetric()
    return table


def reweighted_event_prob(A: SymCoeffTable, lam: LambdaPoint) -> Fraction:
    """(m^W)^n(event) for the weight putting mass lam[i] on part i."""
    return eval_spade(A, lam)


def mc_event_prob(
    m: SampleableMeasure,
    W: Weight,
    event: EventKind,
    n: int,
    samples: int,
    rng: np.random.Generator,
) -> float:
    mw = reweight(m, W)
    X = np.asarray(mw.sample(rng, size=(samples, n))).reshape(samples, n)
    return float(event_contains(event, X, W.parts).mean())


# ---------------------------------------------------------------------------
# random tables for the verification sweep


def random_symmetric_table(n: int, l: int, rnd: random.Random, denominators: int = 12) -> SymCoeffTable:
    values = {
        combo: Fraction(rnd.randint(0, denominators), rnd.randint(1, denominators))
        for combo in itertools.combinations_with_replacement(range(l + 1), n)
    }
    return SymCoeffTable.from_multisets(n, l, values)


def random_nonconstant_table(n: int, l: int, rnd: random.Random) -> SymCoeffTable:
    if n == 0:
        raise ValueError("a table with n = 0 has a single entry and is always constant")
    while True:
        A = random_symmetric_table(n, l, rnd)
        if not A.is_constant():
            return A


def verify_lemmas(max_n: int = 4, max_l: int = 3, tables: int = 200, seed: int = 0,
                  max_component: int = 4, grid_resolution: int = 10) -> dict:
    """Run the exact identity checks and return a JSON-ready report."""
    if max_n > MAX_EXPAND_N or max_l > MAX_EXPAND_L or max_n < 1 or max_l < 1:
        raise ValueError(f"bounds must satisfy 1 <= max_n <= {MAX_EXPAND_N}, 1 <= max_l <= {MAX_EXPAND_L}")
    rnd = random.Random(seed)
    checks = []

    # binomial cancellation over every exponent vector with components <= max_component
    bad, count = [], 0
    for length in range(1, max_l + 2):
        for k in itertools.product(range(max_component + 1), repeat=length):
            if sum(k) == 0:
                continue
            count += 1
            if binomial_cancellation(ExponentVector(k)) != 0:
                bad.append(list(k))
    checks.append({"identity": "binomial-cancellation", "cases": count, "status": "pass" if not bad else "fail",
                   "failures": bad[:10]})

    # closed form vs expansion, all monomials, random tables
    shapes = [(n, l) for n in range(1, max_n + 1) for l in range(1, max_l + 1)]
    bad, count = [], 0
    for j in range(tables):
        n, l = shapes[j % len(shapes)]
        A = random_symmetric_table(n, l, rnd)
        P = substituted_polynomial(A)
        for k in itertools.product(range(n + 1), repeat=l):
            if sum(k) > n:
                continue
            e = ExponentVector(k, n)
            count += 1
            if beta_formula(A, e) != P.coeff(k):
                bad.append({"table": A.to_json(), "k": list(k)})
    checks.append({"identity": "beta-formula-equals-expansion", "cases": count,
                   "status": "pass" if not bad else "fail", "failures": bad[:5]})

    # leading simplification beta / C = a_s - a* under the induction hypothesis
    bad, count = [], 0
    for j in range(tables):
        n, l = shapes[j % len(shapes)]
        ks = [k for k in itertools.product(range(n + 1), repeat=l) if 1 <= sum(k) <= n]
        k = rnd.choice(ks)
        A = _induction_table(n, l, k, rnd)
        count += 1
        if beta_normalized(A, ExponentVector(k, n)) != A[gamma_sequence(k, n, l)] - A.a_star:
            bad.append({"table": A.to_json(), "k": list(k)})
    checks.append({"identity": "beta-normalized-equals-as-minus-astar", "cases": count,
                   "status": "pass" if not bad else "fail", "failures": bad[:5]})

    # spread: nonconstant tables take >= 2 values, constant tables exactly 1
    bad, count = [], 0
    for j in range(tables):
        n, l = shapes[j % len(shapes)]
        A = random_nonconstant_table(n, l, rnd)
        count += 1
        if spread_check(A, grid_resolution) < 2:
            bad.append(A.to_json())
        C = SymCoeffTable.constant(n, l, Fraction(rnd.randint(0, 9), rnd.randint(1, 9)))
        count += 1
        if spread_check(C, grid_resolution) != 1:
            bad.append(C.to_json())
    checks.append({"identity": "spread", "cases": count, "status": "pass" if not bad else "fail",
                   "failures": bad[:5]})

    # constant tables evaluate to their constant everywhere
    bad, count = [], 0
    for n, l in shapes:
        c = Fraction(rnd.randint(0, 9), rnd.randint(1, 9))
        C = SymCoeffTable.constant(n, l, c)
        for p in simplex_grid(l, grid_resolution):
            count += 1
            if eval_spade(C, p) != c:
                bad.append({"n": n, "l": l, "point": [str(v) for v in p.values]})
    checks.append({"identity": "spade-constant", "cases": count, "status": "pass" if not bad else "fail",
                   "failures": bad[:5]})

    return {
        "bounds": {"max_n": max_n, "max_l": max_l, "tables": tables, "seed": seed,
                   "max_component": max_component, "grid_resolution": grid_resolution},
        "checks": checks,
        "status": "pass" if all(c["status"] == "pass" for c in checks) else "fail",
    }


def _induction_table(n: int, l: int, k: Sequence[int], rnd: random.Random) -> SymCoeffTable:
    """Table equal to a* on every sequence with fewer than sum(k) entries below l,
    random elsewhere."""
    a_star = Fraction(rnd.randint(0, 9), rnd.randint(1, 9))
    kk = sum(k)
    values = {}
    for combo in itertools.combinations_with_replacement(range(l + 1), n):
        below = sum(1 for x in combo if x != l)
        values[combo] = a_star if below < kk else Fraction(rnd.randint(0, 9), rnd.randint(1, 9))
    return SymCoeffTable.from_multisets(n, l, values)


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)
