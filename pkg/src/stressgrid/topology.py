"""Distribution-grid topology and the supply model.

The tree is grid stations -> feeders -> transformers -> homes, built
deterministically: homes are placed round-robin onto transformers (and
transformers onto feeders, feeders onto stations), classes are assigned by
a largest-deficit quota stream, and smart-controller flags are dealt to an
exact quota of homes chosen by a seeded shuffle. Feeders are grouped in
consecutive chunks; shedding policies act on those groups.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .homes import HOME_CLASSES, ClassModel, Home, consumption
from .levels import PowerLevel

GROUP_SIZE = 10


@dataclass(frozen=True)
class FeederGroup:
    id: int
    feeder_ids: tuple[int, ...]


@dataclass(frozen=True)
class SupplyModel:
    """Available supply per hour.

    fixed_capacity serves a constant number of watts; fractional_gap
    recomputes capacity every hour as (1 - gap) of that hour's demand.
    """

    mode: str = "fractional_gap"
    capacity_w: float = 0.0
    gap_fraction: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in ("fixed_capacity", "fractional_gap"):
            raise ValueError(f"unknown supply mode {self.mode!r}")
        if self.mode == "fixed_capacity" and self.capacity_w < 0:
            raise ValueError("capacity_w must be non-negative")
        if not 0.0 <= self.gap_fraction < 1.0:
            raise ValueError("gap_fraction must lie in [0, 1)")

    def capacity_for(self, demand_w: float) -> float:
        if self.mode == "fixed_capacity":
            return self.capacity_w
        return (1.0 - self.gap_fraction) * demand_w


@dataclass
class Topology:
    homes: list[Home]
    feeder_of_transformer: list[int]
    station_of_feeder: list[int]
    groups: list[FeederGroup]
    homes_by_group: list[list[Home]] = field(default_factory=list, repr=False)
    homes_by_class: dict[str, list[Home]] = field(default_factory=dict, repr=False)
    smart_homes: list[Home] = field(default_factory=list, repr=False)

    def finalize(self) -> None:
        feeder_group = {}
        for g in self.groups:
            for f in g.feeder_ids:
                feeder_group[f] = g.id
        self.homes_by_group = [[] for _ in self.groups]
        for h in self.homes:
            self.homes_by_group[feeder_group[h.feeder_id]].append(h)
        self.homes_by_class = {label: [] for label in HOME_CLASSES}
        for h in self.homes:
            self.homes_by_class[h.model.home_class.label].append(h)
        self.smart_homes = [h for h in self.homes if h.smart]


def _class_stream(n_homes: int, class_mix: tuple[float, ...]) -> list[str]:
    """Deterministic interleaved class labels honoring the mix quotas."""
    labels = sorted(HOME_CLASSES)
    counts = {c: 0 for c in labels}
    out = []
    for i in range(n_homes):
        deficits = [(class_mix[j] * (i + 1) - counts[c], c) for j, c in enumerate(labels)]
        deficits.sort(key=lambda t: (-t[0], t[1]))
        pick = deficits[0][1]
        counts[pick] += 1
        out.append(pick)
    return out


def build_topology(
    class_models: dict[str, ClassModel],
    n_homes: int,
    n_feeders: int,
    ap: float,
    rng: np.random.Generator,
    homes_per_transformer: int = 5,
    n_grid_stations: int = 5,
    group_size: int = GROUP_SIZE,
    class_mix: tuple[float, ...] = (1 / 3, 1 / 3, 1 / 3),
) -> Topology:
    """Build the tree; `ap` is the fraction of homes given smart control."""
    if n_homes <= 0:
        raise ValueError("need at least one home")
    if n_feeders <= 0:
        raise ValueError("need at least one feeder")
    if not 0.0 <= ap <= 1.0:
        raise ValueError("ap must lie in [0, 1]")
    if abs(sum(class_mix) - 1.0) > 1e-6:
        raise ValueError("class mix must sum to 1")

    n_transformers = math.ceil(n_homes / homes_per_transformer)
    feeder_of_transformer = [t % n_feeders for t in range(n_transformers)]
    station_of_feeder = [f % max(1, n_grid_stations) for f in range(n_feeders)]

    labels = _class_stream(n_homes, class_mix)
    n_smart = round(ap * n_homes)
    smart_ids = set(int(i) for i in rng.permutation(n_homes)[:n_smart])

    homes = []
    for i in range(n_homes):
        t = i % n_transformers
        homes.append(
            Home(
                id=i,
                model=class_models[labels[i]],
                smart=i in smart_ids,
                transformer_id=t,
                feeder_id=feeder_of_transformer[t],
            )
        )

    groups = []
    for gi, start in enumerate(range(0, n_feeders, group_size)):
        fids = tuple(range(start, min(start + group_size, n_feeders)))
        groups.append(FeederGroup(gi, fids))

    topo = Topology(
        homes=homes,
        feeder_of_transformer=feeder_of_transformer,
        station_of_feeder=station_of_feeder,
        groups=groups,
    )
    topo.finalize()
    return topo


def assignment(topology: Topology) -> dict[int, PowerLevel]:
    """Snapshot of every home's current power state."""
    return {h.id: h.current_level for h in topology.homes}


def demand(topology: Topology, levels: dict[int, PowerLevel] | None = None):
    """(unconstrained demand, served demand) in watts.

    Unconstrained demand is what all homes would draw at L5; served demand
    honors the given assignment (default: the homes' current states).
    """
    unconstrained = 0.0
    served = 0.0
    for h in topology.homes:
        unconstrained += consumption(h, PowerLevel.L5)
        level = levels[h.id] if levels is not None else h.current_level
        served += consumption(h, level)
    return unconstrained, served


def served_demand(topology: Topology) -> float:
    """Served demand at the homes' current states."""
    return sum(h.level_watts[h.current_level - 1] for h in topology.homes)


def stress_level(demand_w: float, supply_w: float) -> float:
    """Percent of actual demand not met, floored at zero."""
    if demand_w <= 0:
        raise ValueError("demand must be positive")
    return max(0.0, 100.0 * (demand_w - supply_w) / demand_w)
