"""Borel structures on the reals and the prefix samplers built from them.

A ``BorelStructure`` is a signature plus one deterministic predicate on real
tuples per relation symbol.  Sampling ``n`` reals i.i.d. from a continuous
measure ``m`` and reading off the induced structure on the indices gives the
first ``n`` elements of a draw from the invariant measure ``mu_(P, m)``.

Catalog (closed; each entry strongly witnesses the theory of its countable
target because every one-point extension it needs is an open, nonempty
region of the line, hence of positive mass under any nondegenerate measure):

* ``pure-set``      no relations; target is a countable set.
* ``order``         ``x < y``; target is (Q, <).  Any new point falls into an
                    open gap between the sampled reals.
* ``betweenness`` / ``circular`` / ``separation``
                    the reducts B, K, S of (R, <); same gap argument.
* ``unary-split``   ``R(x) <=> x >= 0``; target is a countable set with an
                    infinite, coinfinite unary predicate.  Both sides of 0
                    are open sets, so both kinds of new point have positive mass.

The Rado graph is only handled through ``er_sample`` (edge-level
randomness), not through a Borel structure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .finstruct import FinStructure, Signature, TypeId, encode_bits
from .measures import SampleableMeasure
from .reducts import ReductKind, reduct_predicates, reduct_signature

TIE_RESAMPLE_CAP = 1000


@dataclass(frozen=True)
class BorelStructure:
    name: str
    sig: Signature
    predicates: tuple[Callable, ...]
    doc: str = field(default="", compare=False)

    def __post_init__(self):
        if len(self.predicates) != len(self.sig):
            raise ValueError(
                f"{self.name}: {len(self.predicates)} predicates for {len(self.sig)} relations"
            )

    def holds(self, name: str, *xs: float) -> bool:
        i = self.sig.index(name)
        if len(xs) != self.sig.arities[i]:
            raise ValueError(f"{name} takes {self.sig.arities[i]} arguments")
        return bool(self.predicates[i](*xs))


@lru_cache(maxsize=None)
def index_tuples(n: int, arity: int) -> np.ndarray:
    """All of {0..n-1}^arity in lexicographic order, shape (n**arity, arity)."""
    return np.array(list(itertools.product(range(n), repeat=arity)), dtype=np.intp).reshape(-1, arity)


def induce(P: BorelStructure, t: Sequence[float]) -> FinStructure:
    """The structure F_P(t) restricted to {0..len(t)-1}."""
    t = [float(x) for x in t]
    if len(set(t)) != len(t):
        raise ValueError("reals must be pairwise distinct")
    rels = []
    for arity, pred in zip(P.sig.arities, P.predicates):
        rels.append(
            tuple(
                idx
                for idx in itertools.product(range(len(t)), repeat=arity)
                if pred(*(t[i] for i in idx))
            )
        )
    return FinStructure(P.sig, len(t), tuple(rels))


def induce_batch(P: BorelStructure, T: np.ndarray) -> np.ndarray:
    """Atomic diagrams for every row of ``T`` (shape (S, n)), as an (S, D) bool array.

    Column order matches ``labeled_type``: relations in signature order, index
    tuples lexicographic.
    """
    T = np.asarray(T, dtype=float)
    S, n = T.shape
    blocks = []
    for arity, pred in zip(P.sig.arities, P.predicates):
        idx = index_tuples(n, arity)
        args = [T[:, idx[:, c]] for c in range(arity)]
        blocks.append(np.broadcast_to(np.asarray(pred(*args), dtype=bool), (S, len(idx))))
    if not blocks:
        return np.zeros((S, 0), dtype=bool)
    return np.concatenate(blocks, axis=1)


def diagram_to_type(sig: Signature, n: int, row: np.ndarray) -> TypeId:
    bits = "".join("1" if b else "0" for b in row)
    chunks, start = [], 0
    for arity in sig.arities:
        width = n**arity
        chunks.append(bits[start : start + width])
        start += width
    return TypeId(encode_bits(n, chunks))


def diagram_to_structure(sig: Signature, n: int, row: np.ndarray) -> FinStructure:
    rels, start = [], 0
    for arity in sig.arities:
        idx = index_tuples(n, arity)
        block = row[start : start + len(idx)]
        rels.append(tuple(tuple(int(x) for x in t) for t in idx[block]))
        start += len(idx)
    return FinStructure(sig, n, tuple(rels))


def count_types(sig: Signature, n: int, D: np.ndarray) -> dict[TypeId, int]:
    if D.shape[1] == 0:
        return {TypeId(encode_bits(n, ["" for _ in sig.arities])): int(D.shape[0])} if D.shape[0] else {}
    packed = np.ascontiguousarray(np.packbits(D, axis=1))
    keys = packed.view(np.dtype((np.void, packed.shape[1]))).ravel()
    _, first, counts = np.unique(keys, return_index=True, return_counts=True)
    return {diagram_to_type(sig, n, D[i]): int(c) for i, c in zip(first, counts)}


def sample_reals(m: SampleableMeasure, n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """(count, n) i.i.d. draws from ``m`` with exact ties resampled."""
    T = np.asarray(m.sample(rng, size=(count, n)), dtype=float).reshape(count, n)
    if n < 2:
        return T
    srt = np.sort(T, axis=1)
    bad = np.flatnonzero((np.diff(srt, axis=1) == 0).any(axis=1))
    for r in bad:
        row = T[r]
        for j in range(1, n):
            attempts = 0
            while row[j] in row[:j]:
                attempts += 1
                if attempts > TIE_RESAMPLE_CAP:
                    raise RuntimeError(
                        f"tie resampling exceeded {TIE_RESAMPLE_CAP} attempts; "
                        f"{m.descriptor} does not look continuous"
                    )
                row[j] = float(m.sample(rng))
    return T


class MuSampler:
    """Prefix sampler for ``mu_(P, m)``."""

    def __init__(self, P: BorelStructure, m: SampleableMeasure):
        self.P = P
        self.m = m

    @property
    def name(self):
        return self.P.name

    @property
    def sig(self):
        return self.P.sig

    @property
    def measure_descriptor(self):
        return self.m.descriptor

    def sample(self, n: int, rng: np.random.Generator) -> FinStructure:
        return induce(self.P, sample_reals(self.m, n, 1, rng)[0])

    def diagrams(self, n: int, count: int, rng: np.random.Generator) -> np.ndarray:
        return induce_batch(self.P, sample_reals(self.m, n, count, rng))


class ERSampler:
    """Prefix sampler for the Erdos-Renyi graph G(N, p)."""

    sig = Signature((("E", 2),))

    def __init__(self, p: float):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"edge probability must lie in [0, 1], got {p}")
        self.p = float(p)

    @property
    def name(self):
        return f"er({self.p:g})"

    @property
    def measure_descriptor(self):
        return f"bernoulli({self.p:g})"

    def adjacency(self, n: int, count: int, rng: np.random.Generator) -> np.ndarray:
        iu = np.triu_indices(n, k=1)
        coins = rng.random((count, len(iu[0]))) < self.p
        A = np.zeros((count, n, n), dtype=bool)
        A[:, iu[0], iu[1]] = coins
        return A | A.transpose(0, 2, 1)

    def diagrams(self, n, count, rng):
        return self.adjacency(n, count, rng).reshape(count, n * n)

    def sample(self, n, rng):
        return diagram_to_structure(self.sig, n, self.diagrams(n, 1, rng)[0])


def as_sampler(P, m: SampleableMeasure | None = None):
    """Accept either a BorelStructure (needs ``m``) or a ready-made sampler."""
    if isinstance(P, BorelStructure):
        if m is None:
            raise ValueError(f"{P.name} needs a measure to sample from")
        return MuSampler(P, m)
    if hasattr(P, "diagrams") and hasattr(P, "sample"):
        return P
    raise TypeError(f"cannot sample from {P!r}")


def sample_prefix(P: BorelStructure, m: SampleableMeasure, n: int, rng: np.random.Generator) -> FinStructure:
    if n < 0:
        raise ValueError("prefix size must be >= 0")
    return MuSampler(P, m).sample(n, rng)


def er_sample(n: int, p: float, rng: np.random.Generator) -> FinStructure:
    return ERSampler(p).sample(n, rng)


def nonnegative(x):
    return x >= 0


_REDUCT_DOCS = {
    ReductKind.PURE_SET: "countable set, empty signature",
    ReductKind.ORDER: "strict order x < y on R",
    ReductKind.BETWEENNESS: "betweenness B on R",
    ReductKind.CIRCULAR: "circular order K on R",
    ReductKind.SEPARATION: "separation S on R",
}


def _catalog() -> dict[str, BorelStructure]:
    cat = {
        kind.value: BorelStructure(kind.value, reduct_signature(kind), reduct_predicates(kind), _REDUCT_DOCS[kind])
        for kind in ReductKind
    }
    cat["unary-split"] = BorelStructure(
        "unary-split", Signature((("R", 1),)), (nonnegative,), "unary R(x) <=> x >= 0"
    )
    return cat


CATALOG = _catalog()
BUILTIN_NAMES = tuple(CATALOG)


def builtin(name: str) -> BorelStructure:
    try:
        return CATALOG[name]
    except KeyError:
        raise ValueError(f"unknown structure {name!r}; expected one of {list(CATALOG)}") from None
