"""Shared fixtures: species models and session-wide element caches.

Heavy objects (registry, caches, one small pair system) are session
scoped so the many property tests do not rebuild radial wave functions
from scratch; every random test draws from a seeded generator so runs
are reproducible.
"""

from __future__ import annotations

import numpy as np
import pytest

from rydpair.angular import half
from rydpair.operators import open_cache
from rydpair.pair import (
    BasisSpec,
    StateTwo,
    build_interaction_operator,
    build_pair_basis,
)
from rydpair.species import StateOne, default_registry


@pytest.fixture(scope="session")
def registry():
    return default_registry()


@pytest.fixture(scope="session")
def hydrogen(registry):
    return registry.get("H")


@pytest.fixture(scope="session")
def rubidium(registry):
    return registry.get("Rb")


@pytest.fixture(scope="session")
def cesium(registry):
    return registry.get("Cs")


@pytest.fixture(scope="session")
def sodium(registry):
    return registry.get("Na")


@pytest.fixture(scope="session")
def cache(registry):
    """In-memory element cache shared across the whole run."""
    return open_cache(None, registry)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260816)


@pytest.fixture(scope="session")
def rb60s_pair():
    """Probe pair |60s1/2 mj=1/2; 60s1/2 mj=1/2> used by several suites."""
    state = StateOne("Rb", 60, 0, half(1), mj=half(1))
    return StateTwo(state, state)


@pytest.fixture(scope="session")
def rb60s_system(registry, rb60s_pair, cache):
    """Small Rb 60s+60s basis (M=1 block) with its interaction operator."""
    spec = BasisSpec(
        target=rb60s_pair, delta_n=2, delta_l=1, energy_window_ghz=20.0,
        m_values=[half(2)],
    )
    models = (registry.get("Rb"), registry.get("Rb"))
    basis = build_pair_basis(models, spec, cache=cache)
    operator = build_interaction_operator(basis, cache=cache)
    return basis, operator
