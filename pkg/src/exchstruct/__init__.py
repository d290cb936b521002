"""Samplers for invariant measures on countable structures, with desk-scale checks."""

from .borel import BorelStructure, builtin, er_sample, induce, sample_prefix
from .finstruct import FinStructure, Permutation, Signature, TypeId, apply_permutation
from .measures import IntervalUnion, StdNormal, Uniform01, Weight, reweight
from .reducts import ReductKind, induce_reduct

__version__ = "0.1.0"

__all__ = [
    "BorelStructure", "builtin", "er_sample", "induce", "sample_prefix",
    "FinStructure", "Permutation", "Signature", "TypeId", "apply_permutation",
    "IntervalUnion", "StdNormal", "Uniform01", "Weight", "reweight",
    "ReductKind", "induce_reduct",
]
