"""Load-shedding policies.

Three ways to close the gap between demand and supply each hour:

* baseline: the utility blacks out whole feeder groups in rotation.
* distributed: smart homes run a stochastic backoff against the broadcast
  stress level, the utility only cuts non-smart groups as a second resort,
  and the two sides alternate one-second rounds until demand is met.
* centralized: the utility computes the whole assignment at once, cutting
  non-smart homes first, then stepping down the biggest smart consumers
  group by group.

All three leave homes alone once the hour has converged. Homes shed in the
previous hour are exempt this hour unless an emergency is declared.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .homes import Home, consumption
from .levels import PowerLevel
from .protocol import CommandChannel
from .topology import Topology, served_demand

MIN_STRESS = 5.0
REDUCTION_FACTOR = 0.5
LATE_ROUNDS_PER_PASS = 5  # smart-home rounds after the first two


@dataclass(frozen=True)
class DistributionProfile:
    """Fractions of backing-off homes aimed at L4/L3/L2; must sum to 1."""

    alpha_l4: float
    alpha_l3: float
    alpha_l2: float

    def __post_init__(self) -> None:
        for a in (self.alpha_l4, self.alpha_l3, self.alpha_l2):
            if not 0.0 <= a <= 1.0:
                raise ValueError("distribution profile entries must lie in [0, 1]")
        if abs(self.alpha_l4 + self.alpha_l3 + self.alpha_l2 - 1.0) > 1e-9:
            raise ValueError("distribution profile must sum to 1")


@dataclass
class StressSignal:
    sl: float
    emergency: bool = False


@dataclass
class BaselineRotation:
    next_group_index: int = 0
    blacked_out: set[int] = field(default_factory=set)


def baseline_step(
    rotation: BaselineRotation,
    topology: Topology,
    capacity_w: float,
    channel: CommandChannel,
    advance: bool = True,
) -> dict[int, PowerLevel]:
    """Cyclic blackout: cut whole groups, starting at the rotation index,
    until served demand fits under capacity. The index advances by one per
    hour so the burden rotates."""
    served = served_demand(topology)
    groups = topology.groups
    blacked: set[int] = set()
    idx = rotation.next_group_index
    for k in range(len(groups)):
        if served <= capacity_w:
            break
        gi = (idx + k) % len(groups)
        for h in topology.homes_by_group[gi]:
            before = consumption(h, h.current_level)
            if channel.apply(h, PowerLevel.L1):
                served -= before
        blacked.add(gi)
    rotation.blacked_out = blacked
    if advance:
        rotation.next_group_index = (idx + 1) % len(groups)
    return {h.id: h.current_level for h in topology.homes}


def alg1_home_decision(
    home: Home,
    sl: float,
    dp: DistributionProfile,
    emergency: bool,
    r: int,
) -> PowerLevel | None:
    """One smart home's backoff decision against stress level `sl`.

    r is the home's fresh random integer in [1, 100]. Returns the state the
    home decides to move to, or None to stay put. The first evaluation in an
    hour clamps sl to at least MIN_STRESS and every evaluation before the
    home has backed off stores the stress it used (sl_init), which later
    rounds reuse as the step-down threshold. Once backed off, the home
    steps down one state per successful draw, never below L2; an emergency
    voids the last-hour exemption, forces the step and allows L2 -> L1.
    """
    if not home.smart:
        raise ValueError("only smart homes run the backoff scheme")
    if not 1 <= r <= 100:
        raise ValueError("r must lie in [1, 100]")
    if home.ls_lh and not emergency:
        return None
    if not home.dlc_done:
        eff = sl
        if home.sl_init is None and eff < MIN_STRESS:
            eff = MIN_STRESS
        home.sl_init = eff
        if r < eff:
            home.dlc_done = True
            if r > (1.0 - dp.alpha_l4) * eff:
                return PowerLevel.L4
            if dp.alpha_l2 * eff < r < (dp.alpha_l3 + dp.alpha_l2) * eff:
                return PowerLevel.L3
            return PowerLevel.L2
        return None
    threshold = home.sl_init
    level = home.current_level
    if level is PowerLevel.L1:
        return None
    if (r < threshold or emergency) and (level is not PowerLevel.L2 or emergency):
        return PowerLevel(level - 1)
    return None


def cut_nonsmart_groups(
    topology: Topology,
    rotation: BaselineRotation,
    capacity_w: float,
    emergency: bool,
    channel: CommandChannel,
) -> None:
    """Shut off non-smart homes group by group until the gap closes or
    every group has been tried. Homes shed last hour are skipped unless an
    emergency is in force. The rotation pointer moves past tried groups."""
    served = served_demand(topology)
    groups = topology.groups
    idx = rotation.next_group_index
    tried = 0
    for k in range(len(groups)):
        if served <= capacity_w:
            break
        gi = (idx + k) % len(groups)
        tried += 1
        for h in topology.homes_by_group[gi]:
            if h.smart or h.current_level is PowerLevel.L1:
                continue
            if h.ls_lh and not emergency:
                continue
            before = consumption(h, h.current_level)
            if channel.apply(h, PowerLevel.L1):
                served -= before
    rotation.next_group_index = (idx + tried) % len(groups)


def alg1_round(
    topology: Topology,
    round_index: int,
    dp: DistributionProfile,
    sl: float,
    capacity_w: float,
    rotation: BaselineRotation,
    emergency: bool,
    rng: np.random.Generator,
    channel: CommandChannel,
    reduction_factor: float = REDUCTION_FACTOR,
) -> None:
    """One ping-pong round of the distributed scheme (one second).

    Round 1: every smart home draws and may back off at the broadcast sl.
    Round 2: the utility cuts non-smart groups while the gap persists.
    Rounds >= 3: backed-off homes step down against their stored stress;
    holdouts re-draw at the reduced stress reduction_factor * sl.
    """
    if round_index == 2:
        cut_nonsmart_groups(topology, rotation, capacity_w, emergency, channel)
        return
    smart = topology.smart_homes
    if not smart:
        return
    rs = rng.integers(1, 101, size=len(smart))
    late = round_index >= 3
    for home, r in zip(smart, rs):
        eff = sl
        if late and not home.dlc_done:
            eff = reduction_factor * sl
        new = alg1_home_decision(home, eff, dp, emergency, int(r))
        if new is not None:
            channel.apply(home, new)


def eligible_lower_levels(
    consumption_fraction: float, emergency: bool = False
) -> list[PowerLevel]:
    """States whose cap sits strictly below the home's current consumption
    fraction. Without an emergency the choice is limited to L4/L3/L2."""
    levels = [PowerLevel.L4, PowerLevel.L3, PowerLevel.L2]
    if emergency:
        levels.append(PowerLevel.L1)
    return [lv for lv in levels if lv.cap_fraction < consumption_fraction]


def alg2_step(
    topology: Topology,
    delta_gap_w: float,
    rotation: BaselineRotation,
    rng: np.random.Generator,
    channel: CommandChannel,
    emergency: bool = False,
) -> bool:
    """One centralized assignment pass; returns True when the gap closed.

    Groups are visited round-robin. In each group every non-smart home is
    shut off first; while the gap persists the group's smart homes are
    stepped down in descending order of current consumption (ties to the
    lower home id), each to a state drawn uniformly from its eligible lower
    states. Homes shed last hour are skipped unless emergency. The rotation
    pointer advances past every group visited.
    """
    gap = delta_gap_w
    groups = topology.groups
    idx = rotation.next_group_index
    visited = 0
    for k in range(len(groups)):
        if gap <= 0:
            break
        gi = (idx + k) % len(groups)
        visited += 1
        members = topology.homes_by_group[gi]
        for h in members:
            if h.smart or h.current_level is PowerLevel.L1:
                continue
            if h.ls_lh and not emergency:
                continue
            saving = consumption(h, h.current_level)
            if channel.apply(h, PowerLevel.L1):
                gap -= saving
        if gap <= 0:
            break
        candidates = [
            h for h in members if h.smart and (emergency or not h.ls_lh)
        ]
        candidates.sort(key=lambda h: (-consumption(h, h.current_level), h.id))
        for h in candidates:
            if gap <= 0:
                break
            current = consumption(h, h.current_level)
            eligible = eligible_lower_levels(current / h.rating_w, emergency)
            eligible = [lv for lv in eligible if lv < h.current_level]
            if not eligible:
                continue
            new = eligible[int(rng.integers(0, len(eligible)))]
            saving = current - consumption(h, new)
            if channel.apply(h, new):
                gap -= saving
    rotation.next_group_index = (idx + visited) % len(groups)
    return gap <= 0


def reset_hourly(homes: list[Home]) -> None:
    """Hour boundary: remember who was shed, restore everyone to L5 and
    clear the backoff state."""
    for h in homes:
        h.ls_lh = h.current_level < PowerLevel.L5
        h.current_level = PowerLevel.L5
        h.dlc_done = False
        h.sl_init = None


class BaselinePolicy:
    """Cyclic whole-group blackout."""

    name = "baseline"

    def __init__(self, topology: Topology, config=None):
        self.rotation = BaselineRotation()
        self._advanced = False

    def max_rounds(self, topology: Topology) -> int:
        return 2 + len(topology.groups) + LATE_ROUNDS_PER_PASS

    def start_hour(self, sl: float) -> None:
        self._advanced = False

    def step(self, state) -> None:
        baseline_step(
            self.rotation,
            state.topology,
            state.capacity_w,
            state.channel,
            advance=not self._advanced,
        )
        self._advanced = True


class DistributedPolicy:
    """In-home stochastic backoff with utility-side group cuts.

    A pass is one smart round, one non-smart round and LATE_ROUNDS_PER_PASS
    more smart rounds, padded with further smart rounds up to the bound of
    2 + group count + LATE_ROUNDS_PER_PASS seconds. If a full pass leaves
    the gap open the engine-visible emergency flag is raised and a second,
    forced pass runs; after that the hour is left non-convergent.
    """

    name = "distributed"

    def __init__(self, topology: Topology, config):
        self.dp: DistributionProfile = config.dp
        self.reduction_factor: float = config.reduction_factor
        self.rotation = BaselineRotation()
        self.round_index = 0
        self.pass_rounds = 2 + len(topology.groups) + LATE_ROUNDS_PER_PASS

    def max_rounds(self, topology: Topology) -> int:
        return 2 * self.pass_rounds

    def start_hour(self, sl: float) -> None:
        self.round_index = 0
        self.sl = sl

    def step(self, state) -> None:
        self.round_index += 1
        in_pass = (self.round_index - 1) % self.pass_rounds + 1
        if self.round_index > self.pass_rounds and not state.emergency:
            state.emergency = True
        alg1_round(
            state.topology,
            in_pass,
            self.dp,
            self.sl,
            state.capacity_w,
            self.rotation,
            state.emergency,
            state.rng,
            state.channel,
            self.reduction_factor,
        )


class CentralizedPolicy:
    """Utility-computed assignment, one full pass per second."""

    name = "centralized"

    def __init__(self, topology: Topology, config=None):
        self.rotation = BaselineRotation()

    def max_rounds(self, topology: Topology) -> int:
        return 3

    def start_hour(self, sl: float) -> None:
        pass

    def step(self, state) -> None:
        gap = served_demand(state.topology) - state.capacity_w
        if gap <= 0:
            return
        closed = alg2_step(
            state.topology,
            gap,
            self.rotation,
            state.rng,
            state.channel,
            emergency=state.emergency,
        )
        if not closed:
            state.emergency = True


POLICIES = {
    "baseline": BaselinePolicy,
    "distributed": DistributedPolicy,
    "centralized": CentralizedPolicy,
}
