import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from exchstruct.finstruct import FinStructure, Permutation, Signature

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

SIGNATURES = [
    Signature((("E", 2),)),
    Signature((("R", 1), ("E", 2))),
    Signature((("T", 3),)),
    Signature(()),
]


@st.composite
def structures(draw, max_size=6, sigs=SIGNATURES):
    sig = draw(st.sampled_from(sigs))
    n = draw(st.integers(0, max_size))
    rels = []
    for arity in sig.arities:
        space = list(itertools.product(range(n), repeat=arity))
        # bias toward sparse relations so ternary symbols stay readable
        keep = draw(st.lists(st.booleans(), min_size=len(space), max_size=len(space)))
        rels.append(tuple(t for t, k in zip(space, keep) if k))
    return FinStructure(sig, n, tuple(rels))


@st.composite
def permutations_of(draw, n):
    return Permutation(tuple(draw(st.permutations(range(n)))))


@st.composite
def structure_and_perm(draw, max_size=6):
    M = draw(structures(max_size=max_size))
    return M, draw(permutations_of(M.size))


@st.composite
def distinct_reals(draw, min_size=0, max_size=6):
    return draw(
        st.lists(
            st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False),
            min_size=min_size, max_size=max_size, unique=True,
        )
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
