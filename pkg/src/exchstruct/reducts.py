"""The five reducts of (Q, <), evaluated on tuples of distinct reals.

The ``*_raw`` predicates are written with ``&``/``|`` so they work on plain
floats and elementwise on numpy arrays alike; the sampler relies on that to
induce whole batches at once.  They evaluate the defining formulas literally,
so any tuple with a repeated entry comes out false.
"""

from __future__ import annotations

import enum
import itertools
from typing import Callable, Sequence

from .finstruct import EMPTY_SIGNATURE, FinStructure, Signature


class ReductKind(enum.Enum):
    PURE_SET = "pure-set"
    ORDER = "order"
    BETWEENNESS = "betweenness"
    CIRCULAR = "circular"
    SEPARATION = "separation"

    @classmethod
    def from_name(cls, name: str) -> "ReductKind":
        for kind in cls:
            if kind.value == name or kind.name.lower() == name.lower():
                return kind
        raise ValueError(f"unknown reduct {name!r}; expected one of {[k.value for k in cls]}")


def less_raw(a, b):
    return a < b


def betweenness_raw(a, b, c):
    return ((a < b) & (b < c)) | ((c < b) & (b < a))


def circular_raw(a, b, c):
    return ((a < b) & (b < c)) | ((b < c) & (c < a)) | ((c < a) & (a < b))


def separation_raw(a, b, c, d):
    K = circular_raw
    return (K(a, b, c) & K(b, c, d) & K(c, d, a)) | (K(d, c, b) & K(c, b, a) & K(b, a, d))


def _require_distinct(*xs):
    if len(set(xs)) != len(xs):
        raise ValueError(f"arguments must be pairwise distinct, got {xs}")


def betweenness(a: float, b: float, c: float) -> bool:
    """B(a, b, c): b lies strictly between a and c."""
    _require_distinct(a, b, c)
    return bool(betweenness_raw(a, b, c))


def circular(a: float, b: float, c: float) -> bool:
    """K(a, b, c): a -> b -> c runs clockwise once the line is closed into a circle."""
    _require_distinct(a, b, c)
    return bool(circular_raw(a, b, c))


def separation(a: float, b: float, c: float, d: float) -> bool:
    """S(a, b, c, d): the pair {a, c} separates {b, d} on the circle."""
    _require_distinct(a, b, c, d)
    return bool(separation_raw(a, b, c, d))


RELATION_NAME = {
    ReductKind.ORDER: "lt",
    ReductKind.BETWEENNESS: "B",
    ReductKind.CIRCULAR: "K",
    ReductKind.SEPARATION: "S",
}

_PREDICATES: dict[ReductKind, tuple[Callable, ...]] = {
    ReductKind.PURE_SET: (),
    ReductKind.ORDER: (less_raw,),
    ReductKind.BETWEENNESS: (betweenness_raw,),
    ReductKind.CIRCULAR: (circular_raw,),
    ReductKind.SEPARATION: (separation_raw,),
}

_SIGNATURES: dict[ReductKind, Signature] = {
    ReductKind.PURE_SET: EMPTY_SIGNATURE,
    ReductKind.ORDER: Signature((("lt", 2),)),
    ReductKind.BETWEENNESS: Signature((("B", 3),)),
    ReductKind.CIRCULAR: Signature((("K", 3),)),
    ReductKind.SEPARATION: Signature((("S", 4),)),
}


def reduct_signature(kind: ReductKind) -> Signature:
    return _SIGNATURES[kind]


def reduct_predicates(kind: ReductKind) -> tuple[Callable, ...]:
    return _PREDICATES[kind]


def induce_reduct(kind: ReductKind, t: Sequence[float]) -> FinStructure:
    t = list(t)
    if len(set(t)) != len(t):
        raise ValueError("reals must be pairwise distinct")
    sig = _SIGNATURES[kind]
    rels = []
    for arity, pred in zip(sig.arities, _PREDICATES[kind]):
        rels.append(
            tuple(
                idx
                for idx in itertools.permutations(range(len(t)), arity)
                if pred(*(t[i] for i in idx))
            )
        )
    return FinStructure(sig, len(t), tuple(rels))
