"""Random network generators shared by the property tests."""

import numpy as np
from hypothesis import strategies as st

from crnp.model import Complex, Reaction, ReactionNetwork, Species


def _complex(rng, n, max_coeff=2, max_support=3):
    size = int(rng.integers(0, min(n, max_support) + 1))
    members = rng.choice(n, size=size, replace=False)
    return Complex(tuple((int(j), int(rng.integers(1, max_coeff + 1))) for j in members))


def random_network(rng, n, r, blocks=1, delays=False) -> ReactionNetwork:
    """Random network with ``n`` species and ``r`` reactions.

    Species may be unused; every complex has at most three species.
    """
    rx = []
    while len(rx) < r:
        a, b = _complex(rng, n), _complex(rng, n)
        if a == b:
            continue
        tau = float(rng.choice([0.0, 0.1, 0.5])) if delays else 0.0
        rx.append(Reaction(a, b, float(rng.uniform(0.2, 3.0)), tau))
    species = tuple(Species(j, f"X{j + 1}") for j in range(n))
    partition = None
    if blocks > 1:
        owner = rng.integers(0, blocks, size=r)
        partition = tuple(frozenset(int(i) for i in np.flatnonzero(owner == p)) for p in range(blocks))
        partition = tuple(b for b in partition if b)
    return ReactionNetwork(species, tuple(rx), partition)


def random_subset(rng, n):
    while True:
        mask = rng.random(n) < 0.5
        if mask.any():
            return frozenset(int(j) for j in np.flatnonzero(mask))


@st.composite
def networks(draw, max_n=6, max_r=7):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(1, max_n))
    r = draw(st.integers(1, max_r))
    return random_network(np.random.default_rng(seed), n, r)


@st.composite
def network_and_subset(draw, max_n=6, max_r=7):
    net = draw(networks(max_n, max_r))
    members = draw(st.sets(st.integers(0, net.n - 1), min_size=1))
    return net, frozenset(members)
