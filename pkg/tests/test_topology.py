"""Topology construction, demand accounting and the supply model."""

from __future__ import annotations

import numpy as np
import pytest

from stressgrid.homes import set_hour_draws
from stressgrid.levels import PowerLevel
from stressgrid.topology import (
    SupplyModel,
    build_topology,
    demand,
    served_demand,
    stress_level,
)


class TestBuild:
    def test_single_group(self, class_models):
        topo = build_topology(
            class_models, n_homes=100, n_feeders=10, ap=0.5,
            rng=np.random.default_rng(0), group_size=10,
        )
        assert len(topo.groups) == 1
        assert topo.groups[0].feeder_ids == tuple(range(10))

    def test_desk_scale_grouping(self, class_models):
        topo = build_topology(
            class_models, n_homes=1000, n_feeders=50, ap=0.9,
            rng=np.random.default_rng(0),
        )
        assert len(topo.groups) == 5
        assert all(len(g.feeder_ids) == 10 for g in topo.groups)

    def test_smart_quota_exact(self, class_models):
        topo = build_topology(
            class_models, n_homes=1000, n_feeders=50, ap=0.9,
            rng=np.random.default_rng(123),
        )
        assert sum(1 for h in topo.homes if h.smart) == 900

    def test_group_partition(self, class_models):
        topo = build_topology(
            class_models, n_homes=120, n_feeders=12, ap=0.5,
            rng=np.random.default_rng(1), group_size=5,
        )
        seen = [f for g in topo.groups for f in g.feeder_ids]
        assert sorted(seen) == list(range(12))
        by_group = sum(len(hs) for hs in topo.homes_by_group)
        assert by_group == 120

    def test_uneven_last_group(self, class_models):
        topo = build_topology(
            class_models, n_homes=50, n_feeders=7, ap=0.0,
            rng=np.random.default_rng(2), group_size=3,
        )
        sizes = [len(g.feeder_ids) for g in topo.groups]
        assert sizes == [3, 3, 1]

    def test_class_mix_quotas(self, class_models):
        topo = build_topology(
            class_models, n_homes=300, n_feeders=10, ap=0.5,
            rng=np.random.default_rng(3),
        )
        counts = {label: len(hs) for label, hs in topo.homes_by_class.items()}
        assert counts == {"A": 100, "B": 100, "C": 100}

    def test_single_class_mix(self, class_models):
        topo = build_topology(
            class_models, n_homes=30, n_feeders=3, ap=1.0,
            rng=np.random.default_rng(4), class_mix=(1.0, 0.0, 0.0),
        )
        assert all(h.model.home_class.label == "A" for h in topo.homes)

    def test_deterministic_given_seed(self, class_models):
        kwargs = dict(n_homes=200, n_feeders=10, ap=0.6)
        a = build_topology(class_models, rng=np.random.default_rng(9), **kwargs)
        b = build_topology(class_models, rng=np.random.default_rng(9), **kwargs)
        assert [h.smart for h in a.homes] == [h.smart for h in b.homes]
        assert [h.feeder_id for h in a.homes] == [h.feeder_id for h in b.homes]

    def test_invalid_inputs(self, class_models):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError, match="home"):
            build_topology(class_models, n_homes=0, n_feeders=5, ap=0.5, rng=rng)
        with pytest.raises(ValueError, match="feeder"):
            build_topology(class_models, n_homes=10, n_feeders=0, ap=0.5, rng=rng)
        with pytest.raises(ValueError, match="ap"):
            build_topology(class_models, n_homes=10, n_feeders=5, ap=1.5, rng=rng)
        with pytest.raises(ValueError, match="mix"):
            build_topology(
                class_models, n_homes=10, n_feeders=5, ap=0.5, rng=rng,
                class_mix=(0.5, 0.5, 0.5),
            )


class TestDemand:
    def test_extremes_and_linearity(self, class_models):
        topo = build_topology(
            class_models, n_homes=40, n_feeders=4, ap=1.0,
            rng=np.random.default_rng(5), class_mix=(1.0, 0.0, 0.0),
        )
        fixed = class_models["A"].rated_draws * 0.5
        for h in topo.homes:
            set_hour_draws(h, fixed)

        levels_l1 = {h.id: PowerLevel.L1 for h in topo.homes}
        unconstrained, served = demand(topo, levels_l1)
        assert served == 0.0

        levels_l5 = {h.id: PowerLevel.L5 for h in topo.homes}
        _, served = demand(topo, levels_l5)
        assert served == pytest.approx(unconstrained)

        half = {
            h.id: (PowerLevel.L1 if i < 20 else PowerLevel.L5)
            for i, h in enumerate(topo.homes)
        }
        _, served = demand(topo, half)
        assert served == pytest.approx(unconstrained / 2)

    def test_served_tracks_current_levels(self, small_topology):
        topo = small_topology()
        _, served_before = demand(topo)
        assert served_demand(topo) == pytest.approx(served_before)
        topo.homes[0].current_level = PowerLevel.L1
        drop = demand(topo)[1]
        assert drop < served_before

    def test_served_never_exceeds_unconstrained(self, small_topology):
        topo = small_topology()
        rng = np.random.default_rng(6)
        for h in topo.homes:
            h.current_level = PowerLevel(int(rng.integers(1, 6)))
        unconstrained, served = demand(topo)
        assert served <= unconstrained + 1e-9


class TestStressLevel:
    def test_formula_points(self):
        assert stress_level(100.0, 80.0) == 20.0
        assert stress_level(100.0, 100.0) == 0.0
        assert stress_level(100.0, 120.0) == 0.0

    def test_zero_demand_rejected(self):
        with pytest.raises(ValueError, match="demand must be positive"):
            stress_level(0.0, 10.0)


class TestSupplyModel:
    def test_fixed_capacity(self):
        s = SupplyModel(mode="fixed_capacity", capacity_w=5000.0)
        assert s.capacity_for(123456.0) == 5000.0
        assert s.capacity_for(1.0) == 5000.0

    def test_fractional_gap(self):
        s = SupplyModel(mode="fractional_gap", gap_fraction=0.3)
        assert s.capacity_for(1000.0) == pytest.approx(700.0)

    def test_validation(self):
        with pytest.raises(ValueError, match="mode"):
            SupplyModel(mode="auction")
        with pytest.raises(ValueError, match="gap_fraction"):
            SupplyModel(mode="fractional_gap", gap_fraction=1.0)
        with pytest.raises(ValueError, match="capacity_w"):
            SupplyModel(mode="fixed_capacity", capacity_w=-1.0)
