"""Finite relational structures on {0, ..., n-1}.

These are the finite prefixes of structures with underlying set N.  Everything
here is brute force: automorphism groups, isomorphism and unlabeled types all
enumerate permutations, so sizes are capped at ``MAX_BRUTE_SIZE``.
"""

from __future__ import annotations

import itertools
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence

MAX_BRUTE_SIZE = 8
MAX_CANONICAL_ARITY = 4

Tuple_ = tuple[int, ...]


@dataclass(frozen=True)
class Signature:
    """Finite relational signature: ordered ``(name, arity)`` pairs."""

    relations: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        rels = tuple((str(name), int(arity)) for name, arity in self.relations)
        object.__setattr__(self, "relations", rels)
        names = [name for name, _ in rels]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate relation names in {names}")
        for name, arity in rels:
            if arity < 1:
                raise ValueError(f"relation {name!r} has arity {arity} < 1")
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
                raise ValueError(f"relation name {name!r} is not an identifier")

    @classmethod
    def of(cls, **arities: int) -> "Signature":
        return cls(tuple(arities.items()))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.relations)

    @property
    def arities(self) -> tuple[int, ...]:
        return tuple(arity for _, arity in self.relations)

    @property
    def max_arity(self) -> int:
        return max(self.arities, default=0)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no relation {name!r} in signature") from None

    def __len__(self):
        return len(self.relations)


EMPTY_SIGNATURE = Signature()


@dataclass(frozen=True)
class FinStructure:
    """A labeled finite structure.

    ``tuples[i]`` is the interpretation of ``sig.relations[i]``, kept as a
    sorted tuple of int tuples so that equality is extensional and encodings
    are reproducible.
    """

    sig: Signature
    size: int
    tuples: tuple[tuple[Tuple_, ...], ...] = field(default=())

    def __post_init__(self):
        if self.size < 0:
            raise ValueError(f"size must be >= 0, got {self.size}")
        rels = self.tuples or tuple(() for _ in self.sig.relations)
        if len(rels) != len(self.sig):
            raise ValueError(
                f"expected {len(self.sig)} interpretations, got {len(rels)}"
            )
        normalized = []
        for (name, arity), rel in zip(self.sig.relations, rels):
            clean = set()
            for tup in rel:
                tup = tuple(int(x) for x in tup)
                if len(tup) != arity:
                    raise ValueError(f"{name}: tuple {tup} does not have arity {arity}")
                if any(x < 0 or x >= self.size for x in tup):
                    raise ValueError(f"{name}: tuple {tup} out of range for size {self.size}")
                clean.add(tup)
            normalized.append(tuple(sorted(clean)))
        object.__setattr__(self, "tuples", tuple(normalized))

    @classmethod
    def from_relations(
        cls, sig: Signature, size: int, relations: Mapping[str, Iterable[Sequence[int]]]
    ) -> "FinStructure":
        unknown = set(relations) - set(sig.names)
        if unknown:
            raise KeyError(f"relations not in signature: {sorted(unknown)}")
        return cls(sig, size, tuple(tuple(map(tuple, relations.get(name, ()))) for name in sig.names))

    @classmethod
    def empty(cls, sig: Signature, size: int) -> "FinStructure":
        return cls(sig, size)

    def relation(self, name: str) -> tuple[Tuple_, ...]:
        return self.tuples[self.sig.index(name)]

    def holds(self, name: str, tup: Sequence[int]) -> bool:
        return tuple(tup) in self._sets[self.sig.index(name)]

    @property
    def _sets(self) -> tuple[frozenset, ...]:
        # cached lazily; the dataclass is frozen so bypass __setattr__
        try:
            return self.__dict__["_set_cache"]
        except KeyError:
            sets = tuple(frozenset(rel) for rel in self.tuples)
            object.__setattr__(self, "_set_cache", sets)
            return sets

    def as_dict(self) -> dict[str, list[list[int]]]:
        return {name: [list(t) for t in rel] for name, rel in zip(self.sig.names, self.tuples)}

    def __repr__(self):
        rels = ", ".join(f"{name}={list(rel)}" for name, rel in zip(self.sig.names, self.tuples))
        return f"FinStructure(size={self.size}{', ' if rels else ''}{rels})"


@dataclass(frozen=True)
class Permutation:
    """Bijection of {0..n-1}; ``mapping[i]`` is the image of ``i``."""

    mapping: tuple[int, ...]

    def __post_init__(self):
        mapping = tuple(int(x) for x in self.mapping)
        if sorted(mapping) != list(range(len(mapping))):
            raise ValueError(f"{mapping} is not a permutation of range({len(mapping)})")
        object.__setattr__(self, "mapping", mapping)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def from_cycle(cls, n: int, *cycle: int) -> "Permutation":
        mapping = list(range(n))
        for a, b in zip(cycle, cycle[1:] + cycle[:1]):
            mapping[a] = b
        return cls(tuple(mapping))

    @property
    def size(self) -> int:
        return len(self.mapping)

    def __call__(self, i: int) -> int:
        return self.mapping[i]

    def __len__(self):
        return len(self.mapping)

    def compose(self, other: "Permutation") -> "Permutation":
        """``self ∘ other``: apply ``other`` first."""
        if other.size != self.size:
            raise ValueError("cannot compose permutations of different sizes")
        return Permutation(tuple(self.mapping[j] for j in other.mapping))

    def __mul__(self, other: "Permutation") -> "Permutation":
        return self.compose(other)

    def inverse(self) -> "Permutation":
        inv = [0] * self.size
        for i, j in enumerate(self.mapping):
            inv[j] = i
        return Permutation(tuple(inv))

    def is_identity(self) -> bool:
        return self.mapping == tuple(range(self.size))


def all_permutations(n: int) -> Iterator[Permutation]:
    for p in itertools.permutations(range(n)):
        yield Permutation(p)


def permute_sequence(t: Sequence, sigma: Permutation) -> list:
    """Move the entry at position ``i`` to position ``sigma(i)``.

    With this convention ``induce(P, permute_sequence(t, s))`` equals
    ``apply_permutation(induce(P, t), s)``.
    """
    if len(t) != sigma.size:
        raise ValueError(f"sequence of length {len(t)} vs permutation of size {sigma.size}")
    inv = sigma.inverse().mapping
    return [t[inv[i]] for i in range(len(t))]


# ---------------------------------------------------------------------------
# logic action, substructures, types


def apply_permutation(M: FinStructure, sigma: Permutation) -> FinStructure:
    """Logic action: ``R^N(s) <=> R^M(sigma^-1 s)``, i.e. push tuples forward."""
    if sigma.size != M.size:
        raise ValueError(f"permutation of size {sigma.size} applied to structure of size {M.size}")
    f = sigma.mapping
    return FinStructure(
        M.sig, M.size, tuple(tuple(tuple(f[x] for x in tup) for tup in rel) for rel in M.tuples)
    )


def induced_substructure(M: FinStructure, indices: Sequence[int]) -> FinStructure:
    indices = [int(i) for i in indices]
    if len(set(indices)) != len(indices):
        raise ValueError(f"repeated index in {indices}")
    for i in indices:
        if not 0 <= i < M.size:
            raise ValueError(f"index {i} out of range for size {M.size}")
    pos = {old: new for new, old in enumerate(indices)}
    rels = []
    for rel in M.tuples:
        rels.append(
            tuple(tuple(pos[x] for x in tup) for tup in rel if all(x in pos for x in tup))
        )
    return FinStructure(M.sig, len(indices), tuple(rels))


@dataclass(frozen=True, order=True)
class TypeId:
    """Canonical encoding of an atomic diagram.

    ``key`` is ``"<n>:"`` followed by one bit string per relation (joined by
    ``/``), each listing membership of every index tuple in lexicographic
    order.  Unlabeled ids carry the lexicographically least key over all
    relabelings.
    """

    key: str
    labeled: bool = True

    def __str__(self):
        return ("L" if self.labeled else "U") + self.key

    @classmethod
    def parse(cls, text: str) -> "TypeId":
        if not text or text[0] not in "LU" or ":" not in text:
            raise ValueError(f"malformed type id {text!r}")
        return cls(text[1:], text[0] == "L")

    def to_bytes(self) -> bytes:
        return str(self).encode("ascii")

    @property
    def size(self) -> int:
        return int(self.key.split(":", 1)[0])


def diagram_bits(M: FinStructure) -> list[str]:
    out = []
    for arity, rel in zip(M.sig.arities, M._sets):
        out.append(
            "".join("1" if tup in rel else "0" for tup in itertools.product(range(M.size), repeat=arity))
        )
    return out


def encode_bits(n: int, bits: Sequence[str]) -> str:
    return f"{n}:" + "/".join(bits)


def labeled_type(M: FinStructure) -> TypeId:
    return TypeId(encode_bits(M.size, diagram_bits(M)), labeled=True)


def unlabeled_type(M: FinStructure) -> TypeId:
    _check_size(M.size)
    n = M.size
    spaces = [list(itertools.product(range(n), repeat=a)) for a in M.sig.arities]
    best = None
    for inv in itertools.permutations(range(n)):
        # inv plays sigma^-1: the relabeled diagram has u in R iff inv(u) in R^M
        key = encode_bits(n, [
            "".join("1" if tuple(inv[x] for x in u) in rel else "0" for u in space)
            for space, rel in zip(spaces, M._sets)
        ])
        if best is None or key < best:
            best = key
    return TypeId(best, labeled=False)


def structure_from_type(sig: Signature, type_id: TypeId | str) -> FinStructure:
    """Inverse of ``labeled_type`` (for unlabeled ids this gives the canonical representative)."""
    if isinstance(type_id, str):
        type_id = TypeId.parse(type_id)
    size_s, _, body = type_id.key.partition(":")
    n = int(size_s)
    chunks = body.split("/") if sig.relations else []
    if len(chunks) != len(sig):
        raise ValueError(f"type id has {len(chunks)} relations, signature has {len(sig)}")
    rels = []
    for arity, bits in zip(sig.arities, chunks):
        tuples = list(itertools.product(range(n), repeat=arity))
        if len(bits) != len(tuples):
            raise ValueError("type id bit string has the wrong length")
        rels.append(tuple(t for t, b in zip(tuples, bits) if b == "1"))
    return FinStructure(sig, n, tuple(rels))


# ---------------------------------------------------------------------------
# automorphisms and isomorphism


def _check_size(n: int, bound: int = MAX_BRUTE_SIZE):
    if n > bound:
        raise ValueError(f"size {n} exceeds brute-force bound {bound}")


def _profiles(M: FinStructure) -> list[tuple]:
    """Per-element isomorphism invariant: occurrence counts by (relation, position, pattern)."""
    counts = [Counter() for _ in range(M.size)]
    for r, rel in enumerate(M.tuples):
        for tup in rel:
            # equality pattern of the tuple distinguishes e.g. loops from edges
            pattern = tuple(tup.index(x) for x in tup)
            for pos, x in enumerate(tup):
                counts[x][(r, pos, pattern)] += 1
    return [tuple(sorted(c.items())) for c in counts]


def _candidate_maps(M: FinStructure, N: FinStructure) -> Iterator[tuple[int, ...]]:
    """Bijections M -> N that respect element profiles (the pruning step)."""
    pm, pn = _profiles(M), _profiles(N)
    if sorted(pm) != sorted(pn):
        return
    by_profile: dict[tuple, list[int]] = {}
    for j, p in enumerate(pn):
        by_profile.setdefault(p, []).append(j)
    classes: dict[tuple, list[int]] = {}
    for i, p in enumerate(pm):
        classes.setdefault(p, []).append(i)
    keys = list(classes)
    sources = [classes[k] for k in keys]
    targets = [by_profile[k] for k in keys]
    for choice in itertools.product(*(itertools.permutations(t) for t in targets)):
        mapping = [0] * M.size
        for src, img in zip(sources, choice):
            for i, j in zip(src, img):
                mapping[i] = j
        yield tuple(mapping)


def _maps_onto(M: FinStructure, N: FinStructure, mapping: Sequence[int]) -> bool:
    for rel, target in zip(M.tuples, N._sets):
        for tup in rel:
            if tuple(mapping[x] for x in tup) not in target:
                return False
    return True


def are_isomorphic(M: FinStructure, N: FinStructure) -> bool:
    if M.sig != N.sig:
        raise ValueError("structures have different signatures")
    if M.size != N.size:
        return False
    if [len(r) for r in M.tuples] != [len(r) for r in N.tuples]:
        return False
    _check_size(M.size)
    # equal cardinalities + injective image inside N means equality
    return any(_maps_onto(M, N, f) for f in _candidate_maps(M, N))


def find_isomorphism(M: FinStructure, N: FinStructure) -> Permutation | None:
    if M.sig != N.sig:
        raise ValueError("structures have different signatures")
    if M.size != N.size or [len(r) for r in M.tuples] != [len(r) for r in N.tuples]:
        return None
    _check_size(M.size)
    for f in _candidate_maps(M, N):
        if _maps_onto(M, N, f):
            return Permutation(f)
    return None


def automorphism_group(M: FinStructure) -> list[Permutation]:
    _check_size(M.size)
    return list(_automorphisms(M))


@lru_cache(maxsize=4096)
def _automorphisms(M: FinStructure) -> tuple[Permutation, ...]:
    # structures are immutable and hashable, so repeated queries (one per k) are free
    return tuple(Permutation(f) for f in _candidate_maps(M, M) if _maps_onto(M, M, f))


# ---------------------------------------------------------------------------
# canonical structures and high homogeneity


@dataclass(frozen=True)
class CanonicalStructure:
    """Orbits of Aut(M) on k-tuples, one relation per orbit, for k = 1..max_arity."""

    size: int
    orbits: tuple[tuple[frozenset, ...], ...]  # orbits[k-1] partitions {0..n-1}^k

    @property
    def max_arity(self) -> int:
        return len(self.orbits)

    def orbit_relations(self, k: int) -> tuple[frozenset, ...]:
        return self.orbits[k - 1]

    def as_structure(self) -> FinStructure:
        rels = []
        for k, orbs in enumerate(self.orbits, start=1):
            for j, _ in enumerate(orbs):
                rels.append((f"R{k}_{j}", k))
        sig = Signature(tuple(rels))
        return FinStructure(sig, self.size, tuple(tuple(o) for orbs in self.orbits for o in orbs))


def tuple_orbits(group: Sequence[Permutation], n: int, k: int) -> tuple[frozenset, ...]:
    seen: set = set()
    orbits = []
    for tup in itertools.product(range(n), repeat=k):
        if tup in seen:
            continue
        orbit = frozenset(tuple(g.mapping[x] for x in tup) for g in group)
        seen |= orbit
        orbits.append(orbit)
    return tuple(orbits)


def canonical_structure(M: FinStructure, max_arity: int) -> CanonicalStructure:
    _check_size(M.size)
    if not 1 <= max_arity <= MAX_CANONICAL_ARITY:
        raise ValueError(f"max_arity must be in 1..{MAX_CANONICAL_ARITY}, got {max_arity}")
    group = automorphism_group(M)
    return CanonicalStructure(
        M.size, tuple(tuple_orbits(group, M.size, k) for k in range(1, max_arity + 1))
    )


def is_highly_homogeneous_finite(M: FinStructure, k: int) -> bool:
    """Aut(M) is transitive on k-element subsets."""
    _check_size(M.size)
    if not 0 <= k <= M.size:
        raise ValueError(f"k={k} must lie in 0..{M.size}")
    start = tuple(range(k))
    orbit = {frozenset(g.mapping[x] for x in start) for g in automorphism_group(M)}
    return len(orbit) == math.comb(M.size, k)


def all_k_substructures_isomorphic(M: FinStructure, k: int) -> bool:
    """All k-element induced substructures share one unlabeled type."""
    if k == 0 or k == M.size:
        return True
    types = {unlabeled_type(induced_substructure(M, c)) for c in itertools.combinations(range(M.size), k)}
    return len(types) <= 1


# ---------------------------------------------------------------------------
# text format
#
#   signature E/2 R/1
#   size 3
#   E: (0,1) (1,0)
#   R: (2)


def format_structure(M: FinStructure) -> str:
    lines = ["signature " + " ".join(f"{n}/{a}" for n, a in M.sig.relations), f"size {M.size}"]
    for name, rel in zip(M.sig.names, M.tuples):
        body = " ".join("(" + ",".join(map(str, t)) + ")" for t in rel)
        lines.append(f"{name}: {body}".rstrip())
    return "\n".join(lines) + "\n"


def parse_structure(text: str) -> FinStructure:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("#")]
    if len(lines) < 2 or not lines[0].startswith("signature") or not lines[1].startswith("size"):
        raise ValueError("expected 'signature ...' and 'size n' header lines")
    rels = []
    for item in lines[0].split()[1:]:
        name, _, arity = item.partition("/")
        if not arity:
            raise ValueError(f"bad signature entry {item!r}")
        rels.append((name, int(arity)))
    sig = Signature(tuple(rels))
    size = int(lines[1].split()[1])
    relations: dict[str, list] = {}
    for line in lines[2:]:
        name, sep, body = line.partition(":")
        if not sep:
            raise ValueError(f"bad relation line {line!r}")
        name = name.strip()
        if name in relations:
            raise ValueError(f"relation {name!r} listed twice")
        relations[name] = [
            tuple(int(x) for x in grp.split(",") if x.strip())
            for grp in re.findall(r"\(([^)]*)\)", body)
        ]
    return FinStructure.from_relations(sig, size, relations)
