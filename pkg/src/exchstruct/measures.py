"""Continuous probability measures on the real line and their reweightings.

Intervals are half-open ``[lo, hi)``; an infinite end is ``math.inf`` /
``-math.inf`` (IEEE infinities, which ``ndtr`` and comparisons handle
exactly).  Weights keep their masses as ``Fraction`` when they were given as
rationals so that downstream polynomial identities stay exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.special import ndtr, ndtri

MAX_INTERVALS_PER_PART = 64
REJECTION_CAP = 10**6
MASS_TOLERANCE = 1e-12

Mass = Union[Fraction, float]


def _endpoint(x) -> float:
    if isinstance(x, str):
        s = x.strip().lower()
        if s in ("-inf", "-infinity"):
            return -math.inf
        if s in ("inf", "+inf", "infinity"):
            return math.inf
        return float(Fraction(s))
    return float(x)


@dataclass(frozen=True, order=True)
class Interval:
    """Nonempty half-open interval ``[lo, hi)`` (open at an infinite end)."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = _endpoint(self.lo), _endpoint(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval endpoints must not be NaN")
        if not lo < hi:
            raise ValueError(f"empty interval [{lo}, {hi})")
        if lo == math.inf or hi == -math.inf:
            raise ValueError(f"empty interval [{lo}, {hi})")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def contains(self, x):
        return (x >= self.lo) & (x < self.hi)

    def intersect(self, other: "Interval") -> "Interval | None":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return Interval(lo, hi) if lo < hi else None


@dataclass(frozen=True)
class IntervalUnion:
    """Finite disjoint union of half-open intervals, stored sorted and merged."""

    intervals: tuple[Interval, ...] = ()

    def __post_init__(self):
        ivs = sorted(self.intervals)
        merged: list[Interval] = []
        for iv in ivs:
            if merged and iv.lo < merged[-1].hi:
                raise ValueError(f"overlapping intervals {merged[-1]} and {iv}")
            if merged and iv.lo == merged[-1].hi:
                merged[-1] = Interval(merged[-1].lo, iv.hi)
            else:
                merged.append(iv)
        object.__setattr__(self, "intervals", tuple(merged))

    @classmethod
    def of(cls, *pairs) -> "IntervalUnion":
        """Build from ``(lo, hi)`` pairs; degenerate pairs ``lo >= hi`` are dropped."""
        ivs = []
        for lo, hi in pairs:
            lo, hi = _endpoint(lo), _endpoint(hi)
            if lo < hi:
                ivs.append(Interval(lo, hi))
        return cls(tuple(ivs))

    @classmethod
    def real_line(cls) -> "IntervalUnion":
        return cls((Interval(-math.inf, math.inf),))

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=bool)
        for iv in self.intervals:
            out |= iv.contains(x)
        return out if out.shape else bool(out)

    def intersect(self, other: "IntervalUnion") -> "IntervalUnion":
        out = []
        for a in self.intervals:
            for b in other.intervals:
                c = a.intersect(b)
                if c is not None:
                    out.append(c)
        return IntervalUnion(tuple(out))

    def complement(self) -> "IntervalUnion":
        pairs, lo = [], -math.inf
        for iv in self.intervals:
            pairs.append((lo, iv.lo))
            lo = iv.hi
        pairs.append((lo, math.inf))
        return IntervalUnion.of(*pairs)

    def issubset(self, other: "IntervalUnion") -> bool:
        return self.intersect(other) == self

    def to_json(self) -> list:
        return [[_json_end(iv.lo), _json_end(iv.hi)] for iv in self.intervals]

    def __str__(self):
        if not self.intervals:
            return "{}"
        return " u ".join(f"[{iv.lo:g}, {iv.hi:g})" for iv in self.intervals)


def _json_end(x: float):
    if x == math.inf:
        return "inf"
    if x == -math.inf:
        return "-inf"
    return x


def _as_union(B) -> IntervalUnion:
    if isinstance(B, IntervalUnion):
        return B
    if isinstance(B, Interval):
        return IntervalUnion((B,))
    return IntervalUnion.of(*B)


def _parse_mass(x) -> Mass:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise ValueError("mass must be a number")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, Real):
        return float(x)
    raise ValueError(f"cannot interpret {x!r} as a mass")


@dataclass(frozen=True)
class Weight:
    """Partition of R into interval unions with positive masses summing to 1."""

    parts: tuple[IntervalUnion, ...]
    masses: tuple[Mass, ...]

    def __post_init__(self):
        parts = tuple(_as_union(p) for p in self.parts)
        masses = tuple(_parse_mass(u) for u in self.masses)
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "masses", masses)
        if not parts:
            raise ValueError("a weight needs at least one part")
        if len(parts) != len(masses):
            raise ValueError(f"{len(parts)} parts but {len(masses)} masses")
        for i, part in enumerate(parts):
            if part.is_empty:
                raise ValueError(f"part {i} is empty")
            if len(part.intervals) > MAX_INTERVALS_PER_PART:
                raise ValueError(
                    f"part {i} has {len(part.intervals)} intervals; cap is {MAX_INTERVALS_PER_PART}"
                )
        for i, u in enumerate(masses):
            if not u > 0:
                raise ValueError(f"mass of part {i} is {u}; masses must be positive")
        if all(isinstance(u, Fraction) for u in masses):
            if sum(masses) != 1:
                raise ValueError(f"masses sum to {sum(masses)}, not 1")
        elif abs(math.fsum(float(u) for u in masses) - 1.0) > MASS_TOLERANCE:
            raise ValueError(f"masses sum to {math.fsum(float(u) for u in masses)!r}, not 1")
        # the parts must tile the line: sorted intervals chain from -inf to inf
        ivs = sorted(iv for p in parts for iv in p.intervals)
        edge = -math.inf
        for iv in ivs:
            if iv.lo < edge:
                raise ValueError(f"parts overlap near {iv.lo}")
            if iv.lo > edge:
                raise ValueError(f"parts leave a gap [{edge}, {iv.lo})")
            edge = iv.hi
        if edge != math.inf:
            raise ValueError(f"parts leave a gap [{edge}, inf)")

    @classmethod
    def trivial(cls) -> "Weight":
        return cls((IntervalUnion.real_line(),), (Fraction(1),))

    @classmethod
    def split_at(cls, cut: float, mass_below, mass_above) -> "Weight":
        """Two-part weight ``(-inf, cut)`` / ``[cut, inf)``."""
        return cls(
            (IntervalUnion.of((-math.inf, cut)), IntervalUnion.of((cut, math.inf))),
            (mass_below, mass_above),
        )

    @property
    def float_masses(self) -> np.ndarray:
        return np.array([float(u) for u in self.masses])

    def to_json(self) -> dict:
        return {
            "parts": [p.to_json() for p in self.parts],
            "masses": [str(u) if isinstance(u, Fraction) else u for u in self.masses],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Weight":
        try:
            parts = [IntervalUnion.of(*[tuple(pair) for pair in part]) for part in data["parts"]]
            masses = data["masses"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed weight JSON: {exc}") from exc
        return cls(tuple(parts), tuple(masses))

    @classmethod
    def load(cls, path: str | Path) -> "Weight":
        return cls.from_json(json.loads(Path(path).read_text()))

    def describe(self) -> str:
        return "; ".join(f"{p}:{u}" for p, u in zip(self.parts, self.masses))


# ---------------------------------------------------------------------------
# measures


class SampleableMeasure:
    """Base class.  Subclasses provide ``cdf`` and vectorized ``sample``.

    ``ppf`` is only defined where a closed-form inverse is available; the
    conditional sampler falls back to rejection otherwise.
    """

    name = "measure"
    support = IntervalUnion.real_line()
    has_ppf = False

    def cdf(self, x):
        raise NotImplementedError

    def sf(self, x):
        return 1.0 - self.cdf(x)

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def interval_mass(self, iv: Interval) -> float:
        # lower-tail formula when the interval sits below the median, survival otherwise
        if iv.hi <= 0:
            return float(self.cdf(iv.hi) - self.cdf(iv.lo))
        return float(self.sf(iv.lo) - self.sf(iv.hi))

    def interval_prob(self, B) -> float:
        B = _as_union(B)
        return math.fsum(self.interval_mass(iv) for iv in B.intervals)

    @property
    def descriptor(self) -> str:
        return self.name

    def __repr__(self):
        return f"<{type(self).__name__} {self.descriptor}>"


class StdNormal(SampleableMeasure):
    name = "normal"
    has_ppf = True

    def cdf(self, x):
        return ndtr(x)

    def sf(self, x):
        return ndtr(-np.asarray(x, dtype=float))

    def ppf(self, u):
        return ndtri(u)

    def isf(self, u):
        return -ndtri(u)

    def sample(self, rng, size=None):
        return rng.standard_normal(size)

    def __eq__(self, other):
        return type(other) is StdNormal

    def __hash__(self):
        return hash("StdNormal")


class Uniform01(SampleableMeasure):
    name = "uniform01"
    support = IntervalUnion.of((0.0, 1.0))
    has_ppf = True

    def cdf(self, x):
        return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)

    def sf(self, x):
        return 1.0 - self.cdf(x)

    def ppf(self, u):
        return np.asarray(u, dtype=float)

    def isf(self, u):
        return 1.0 - np.asarray(u, dtype=float)

    def interval_mass(self, iv):
        return max(0.0, min(iv.hi, 1.0) - max(iv.lo, 0.0))

    def sample(self, rng, size=None):
        return rng.random(size)

    def __eq__(self, other):
        return type(other) is Uniform01

    def __hash__(self):
        return hash("Uniform01")


class Reweighted(SampleableMeasure):
    """``m^W(B) = sum_I u_W(I) m(B & I) / m(I)``."""

    def __init__(self, base: SampleableMeasure, weight: Weight):
        self.base = base
        self.weight = weight
        self.part_masses = tuple(base.interval_prob(p) for p in weight.parts)
        for part, mass in zip(weight.parts, self.part_masses):
            if not mass > 0:
                raise ValueError(
                    f"part {part} has zero mass under {base.descriptor}; "
                    "the weight is incompatible with this measure's support"
                )

    @property
    def support(self):
        return self.base.support

    @property
    def descriptor(self):
        return f"reweighted({self.base.descriptor}; {self.weight.describe()})"

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        total = np.zeros(x.shape)
        for part, u, pm in zip(self.weight.parts, self.weight.masses, self.part_masses):
            below = np.zeros(x.shape)
            for iv in part.intervals:
                hi = np.minimum(x, iv.hi)
                # mass of [lo, min(x, hi)) under the base measure
                seg = np.where(hi > iv.lo, self.base.cdf(hi) - self.base.cdf(iv.lo), 0.0)
                below = below + seg
            total = total + float(u) * below / pm
        return total if total.shape else float(total)

    def interval_mass(self, iv):
        B = IntervalUnion((iv,))
        return math.fsum(
            float(u) * self.base.interval_prob(B.intersect(part)) / pm
            for part, u, pm in zip(self.weight.parts, self.weight.masses, self.part_masses)
        )

    def interval_prob(self, B) -> float:
        B = _as_union(B)
        return math.fsum(
            float(u) * self.base.interval_prob(B.intersect(part)) / pm
            for part, u, pm in zip(self.weight.parts, self.weight.masses, self.part_masses)
        )

    def sample(self, rng, size=None):
        n = 1 if size is None else int(np.prod(size))
        choice = rng.choice(len(self.weight.parts), size=n, p=self.weight.float_masses / self.weight.float_masses.sum())
        out = np.empty(n)
        for j, part in enumerate(self.weight.parts):
            idx = np.flatnonzero(choice == j)
            if idx.size:
                out[idx] = conditional_sample(self.base, part, rng, size=idx.size)
        if size is None:
            return float(out[0])
        return out.reshape(size)

    def __eq__(self, other):
        return isinstance(other, Reweighted) and other.base == self.base and other.weight == self.weight

    def __hash__(self):
        return hash((self.base, self.weight))


def reweight(m: SampleableMeasure, W: Weight) -> Reweighted:
    return Reweighted(m, W)


MEASURES = {"normal": StdNormal, "uniform01": Uniform01}


def measure_from_name(name: str) -> SampleableMeasure:
    try:
        return MEASURES[name]()
    except KeyError:
        raise ValueError(f"unknown measure {name!r}; expected one of {sorted(MEASURES)}") from None


def product_prob(m: SampleableMeasure, boxes: Sequence) -> float:
    """i.i.d. product measure of the rectangle ``boxes[0] x boxes[1] x ...``."""
    p = 1.0
    for box in boxes:
        p *= m.interval_prob(box)
    return p


def conditional_sample(m: SampleableMeasure, I, rng: np.random.Generator, size=None):
    """Sample ``m`` conditioned on the interval union ``I``.

    Inverse-CDF restriction when ``m`` has a closed-form inverse, rejection
    (at most ``REJECTION_CAP`` proposal rounds) otherwise.
    """
    I = _as_union(I)
    total = m.interval_prob(I)
    if not total > 0:
        raise ValueError(f"{I} has zero mass under {m.descriptor}")
    n = 1 if size is None else int(np.prod(size))
    if m.has_ppf:
        out = _inverse_cdf_sample(m, I, rng, n)
    else:
        out = _rejection_sample(m, I, rng, n)
    if size is None:
        return float(out[0])
    return out.reshape(size)


def _inverse_cdf_sample(m, I, rng, n):
    ivs = I.intervals
    masses = np.array([m.interval_mass(iv) for iv in ivs])
    which = rng.choice(len(ivs), size=n, p=masses / masses.sum()) if len(ivs) > 1 else np.zeros(n, dtype=int)
    # keep u off 0 so an infinite end never maps to +-inf
    u = np.maximum(rng.random(n), 2.0**-54)
    out = np.empty(n)
    for j, iv in enumerate(ivs):
        sel = which == j
        if not sel.any():
            continue
        if iv.hi <= 0:
            a, b = m.cdf(iv.lo), m.cdf(iv.hi)
            x = m.ppf(a + u[sel] * (b - a))
        else:
            # upper region: invert the survival function to keep tail precision
            a, b = m.sf(iv.hi), m.sf(iv.lo)
            x = m.isf(b - u[sel] * (b - a))
        # rounding at the very edge of the interval
        out[sel] = np.clip(x, iv.lo, np.nextafter(iv.hi, -math.inf))
    return out


def _rejection_sample(m, I, rng, n):
    out = np.empty(n)
    filled = 0
    for _ in range(REJECTION_CAP):
        need = n - filled
        draws = np.atleast_1d(m.sample(rng, size=max(need, 16)))
        keep = draws[I.contains(draws)][:need]
        out[filled : filled + keep.size] = keep
        filled += keep.size
        if filled == n:
            return out
    raise RuntimeError(f"rejection sampling on {I} exceeded {REJECTION_CAP} rounds")


def is_nondegenerate_on(m: SampleableMeasure, intervals: Iterable[Interval]) -> bool:
    return all(m.interval_prob(iv) > 0 for iv in intervals)
