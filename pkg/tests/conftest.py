"""Shared fixtures: fitted class models and small topology builders.

Class models are fitted once per session from the bundled corpus; they are
read-only and shared by every test that needs realistic homes.
"""

from __future__ import annotations

import numpy as np
import pytest

from stressgrid.engine import load_models
from stressgrid.homes import set_hour_draws
from stressgrid.topology import build_topology


@pytest.fixture(scope="session")
def class_models():
    return load_models("builtin")


@pytest.fixture
def small_topology(class_models):
    """100 homes on 10 feeders (2 groups of 5), 90% smart, fresh each test."""

    def build(ap=0.9, n_homes=100, n_feeders=10, group_size=5, seed=7, class_mix=None):
        rng = np.random.default_rng(seed)
        topo = build_topology(
            class_models,
            n_homes=n_homes,
            n_feeders=n_feeders,
            ap=ap,
            rng=rng,
            group_size=group_size,
            class_mix=class_mix if class_mix is not None else (1 / 3, 1 / 3, 1 / 3),
        )
        for h in topo.homes:
            set_hour_draws(h, h.model.rated_draws * 0.8)
        return topo

    return build
