"""Event-driven simulation engine.

Time advances in one-second steps inside hourly windows. At each hour
boundary every home is restored to full power, appliance draws are
redrawn, and the hour's supply and stress level are fixed. While served
demand exceeds capacity the active policy runs one round per second; once
the hour converges no state changes until the next boundary, so the engine
skips ahead. A run is a pure function of (config, seed).

Under-load wastage and all level statistics are recorded at the converged
state of each hour. A policy that exhausts its round budget leaves the
hour marked non-convergent and the run carries on.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields

import numpy as np

from . import corpus
from .consumption import load_corpus, sample_inverse
from .homes import ClassModel, build_class_model, consumption, set_hour_draws
from .levels import PowerLevel, UtilityParams, utility
from .metrics import HourRecord, MetricsLog, TraceEvent
from .policies import POLICIES, DistributionProfile, reset_hourly
from .protocol import CommandChannel, LinkModel
from .topology import SupplyModel, Topology, build_topology, served_demand, stress_level

SECONDS_PER_HOUR = 3600


@dataclass(frozen=True)
class SimConfig:
    horizon_hours: int = 24
    n_homes: int = 1000
    n_feeders: int = 50
    group_size: int = 10
    homes_per_transformer: int = 5
    n_grid_stations: int = 5
    class_mix: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    data_dir: str = "builtin"
    ap: float = 0.9
    supply: SupplyModel = field(default_factory=SupplyModel)
    policy: str = "baseline"
    dp: DistributionProfile = field(
        default_factory=lambda: DistributionProfile(0.4, 0.3, 0.3)
    )
    reduction_factor: float = 0.5
    utility: UtilityParams = field(default_factory=UtilityParams)
    protocol_emulation: bool = False
    protocol_distance_m: float = 10.0
    seed: int = 0
    runs: int = 1

    def __post_init__(self) -> None:
        if self.horizon_hours < 1:
            raise ValueError("horizon_hours must be at least 1")
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if not 0.0 <= self.ap <= 1.0:
            raise ValueError("ap must lie in [0, 1]")
        if not 0.0 < self.reduction_factor <= 1.0:
            raise ValueError("reduction_factor must lie in (0, 1]")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")

    def config_hash(self) -> str:
        parts = []
        for f in fields(self):
            parts.append(f"{f.name}={getattr(self, f.name)!r}")
        return hashlib.sha256(";".join(parts).encode()).hexdigest()[:16]


@dataclass
class SimState:
    topology: Topology
    rng: np.random.Generator
    channel: CommandChannel
    capacity_w: float = 0.0
    emergency: bool = False
    hour: int = 0
    second: int = 0


_MODEL_CACHE: dict[str, dict[str, ClassModel]] = {}


def load_models(data_dir: str) -> dict[str, ClassModel]:
    """Fitted class models for a corpus path, or the bundled corpus."""
    if data_dir not in _MODEL_CACHE:
        if data_dir == "builtin":
            raw = corpus.synthetic_samples()
        else:
            raw = load_corpus(data_dir)
        _MODEL_CACHE[data_dir] = {
            label: build_class_model(label, samples)
            for label, samples in sorted(raw.items())
        }
    return _MODEL_CACHE[data_dir]


def converged(topology: Topology, capacity_w: float) -> bool:
    return bool(served_demand(topology) <= capacity_w)


def _refresh_draws(topology: Topology, rng: np.random.Generator) -> None:
    """Redraw every appliance for the hour, class by class in home order."""
    for label in sorted(topology.homes_by_class):
        homes = topology.homes_by_class[label]
        if not homes:
            continue
        model = homes[0].model
        u = rng.random((len(homes), model.n_appliances))
        draws = np.empty_like(u)
        for j, cdf in enumerate(model.cdfs):
            draws[:, j] = sample_inverse(cdf, u[:, j])
        for i, h in enumerate(homes):
            set_hour_draws(h, draws[i])


def run(config: SimConfig) -> MetricsLog:
    """Execute one simulation run; deterministic given (config, seed)."""
    models = load_models(config.data_dir)
    rng = np.random.default_rng(config.seed)
    topo = build_topology(
        models,
        n_homes=config.n_homes,
        n_feeders=config.n_feeders,
        ap=config.ap,
        rng=rng,
        homes_per_transformer=config.homes_per_transformer,
        n_grid_stations=config.n_grid_stations,
        group_size=config.group_size,
        class_mix=config.class_mix,
    )
    link = LinkModel() if config.protocol_emulation else None
    channel = CommandChannel(link, config.protocol_distance_m, rng)
    policy = POLICIES[config.policy](topo, config)
    state = SimState(topology=topo, rng=rng, channel=channel)
    gap_pct = (
        100.0 * config.supply.gap_fraction
        if config.supply.mode == "fractional_gap"
        else float("nan")
    )
    log = MetricsLog(
        policy=config.policy,
        seed=config.seed,
        gap_percent=gap_pct,
        ap=config.ap,
        config_hash=config.config_hash(),
    )
    max_rounds = policy.max_rounds(topo)

    for hour in range(config.horizon_hours):
        state.hour = hour
        state.emergency = False
        reset_hourly(topo.homes)
        _refresh_draws(topo, rng)
        demand_w = served_demand(topo)  # everyone is at L5
        capacity_w = config.supply.capacity_for(demand_w)
        state.capacity_w = capacity_w
        sl = stress_level(demand_w, capacity_w) if demand_w > 0 else 0.0
        policy.start_hour(sl)
        log.trace.append(TraceEvent(hour, 0, "hour_start", f"sl={sl:.3f}"))

        rounds = 0
        is_converged = converged(topo, capacity_w)
        if not is_converged:
            log.trace.append(TraceEvent(hour, 0, "gap_detected"))
        while not is_converged and rounds < max_rounds:
            state.second = rounds
            was_emergency = state.emergency
            policy.step(state)
            rounds += 1
            if state.emergency and not was_emergency:
                log.trace.append(TraceEvent(hour, rounds, "emergency"))
            is_converged = converged(topo, capacity_w)
        log.trace.append(
            TraceEvent(
                hour, rounds, "converged" if is_converged else "non_convergent"
            )
        )

        served_w = served_demand(topo)
        levels = [h.current_level for h in topo.homes]
        counts = [0, 0, 0, 0, 0]
        smart_counts = [0, 0, 0, 0, 0]
        repeat_shed = 0
        for h in topo.homes:
            counts[h.current_level - 1] += 1
            if h.smart:
                smart_counts[h.current_level - 1] += 1
            if h.ls_lh and h.current_level < PowerLevel.L5 and not state.emergency:
                repeat_shed += 1
        log.hours.append(
            HourRecord(
                hour=hour,
                demand_w=demand_w,
                capacity_w=capacity_w,
                served_w=served_w,
                ulw_w=max(0.0, capacity_w - served_w) if is_converged else 0.0,
                level_counts=tuple(counts),
                smart_level_counts=tuple(smart_counts),
                mean_utility=sum(utility(lv, config.utility) for lv in levels)
                / len(levels),
                convergence_seconds=rounds,
                converged=is_converged,
                emergency=state.emergency,
                repeat_shed_homes=repeat_shed,
            )
        )
    log.commands_sent = channel.sent
    log.commands_lost = channel.lost
    return log
