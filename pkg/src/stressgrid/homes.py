"""Home model: classes, disconnectivity matrices and per-home state.

A home class fixes the meter rating and appliance count. The class's
disconnectivity matrix (DM) records which appliances are switched off at
each restricted power state so that the rated draw of whatever stays
connected fits under the state's cap. Appliance rated draw is the 95th
percentile of its fitted distribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .consumption import ApplianceSamples, EmpiricalCdf, filter_outliers, fit_cdf, sample_inverse
from .levels import CAP_FRACTION, PowerLevel

RATED_QUANTILE = 0.95


@dataclass(frozen=True)
class HomeClass:
    label: str
    rating_w: float
    appliance_count: int


HOME_CLASSES = {
    "A": HomeClass("A", 500.0, 7),
    "B": HomeClass("B", 750.0, 10),
    "C": HomeClass("C", 1000.0, 13),
}

_RESTRICTED = (PowerLevel.L2, PowerLevel.L3, PowerLevel.L4)


@dataclass(frozen=True)
class DisconnectivityMatrix:
    """Appliance indices disconnected at each restricted level."""

    disconnected: dict[PowerLevel, frozenset[int]]

    def connected_mask(self, level: PowerLevel, n_appliances: int) -> np.ndarray:
        mask = np.ones(n_appliances, dtype=bool)
        if level is PowerLevel.L1:
            mask[:] = False
        elif level in self.disconnected:
            mask[list(self.disconnected[level])] = False
        return mask


def build_dm(home_class: HomeClass, appliance_ratings) -> DisconnectivityMatrix:
    """Greedy DM construction: disconnect largest-rated appliances first
    until the remaining rated sum fits under each level's cap. Ties are
    broken so the lower appliance index stays connected.
    """
    ratings = np.asarray(appliance_ratings, dtype=float)
    if ratings.size != home_class.appliance_count:
        raise ValueError(
            f"class {home_class.label} expects {home_class.appliance_count} "
            f"appliances, got {ratings.size}"
        )
    if np.any(ratings < 0):
        raise ValueError("negative appliance rating")
    order = sorted(range(ratings.size), key=lambda i: (-ratings[i], -i))
    disconnected: dict[PowerLevel, frozenset[int]] = {}
    for level in _RESTRICTED:
        cap = CAP_FRACTION[level] * home_class.rating_w
        remaining = float(ratings.sum())
        cut: set[int] = set()
        for i in order:
            if remaining <= cap:
                break
            cut.add(i)
            remaining -= ratings[i]
        disconnected[level] = frozenset(cut)
    return DisconnectivityMatrix(disconnected)


@dataclass
class ClassModel:
    """Fitted per-class artifacts shared by every home of the class."""

    home_class: HomeClass
    appliance_names: list[str]
    cdfs: list[EmpiricalCdf]
    rated_draws: np.ndarray
    dm: DisconnectivityMatrix
    conn_matrix: np.ndarray  # (n_appliances, 5) 0/1, column per level

    @property
    def n_appliances(self) -> int:
        return self.home_class.appliance_count


def build_class_model(
    label: str,
    samples: list[ApplianceSamples],
    bandwidth: float | None = None,
) -> ClassModel:
    """Filter, fit and derive the DM for one home class."""
    home_class = HOME_CLASSES[label]
    if len(samples) != home_class.appliance_count:
        raise ValueError(
            f"class {label} manifest lists {len(samples)} appliances, "
            f"expected {home_class.appliance_count}"
        )
    filtered = [filter_outliers(s) for s in samples]
    cdfs = [fit_cdf(s, bandwidth=bandwidth) for s in filtered]
    rated = np.array([sample_inverse(c, RATED_QUANTILE) for c in cdfs])
    dm = build_dm(home_class, rated)
    conn = np.zeros((home_class.appliance_count, 5))
    for level in PowerLevel:
        conn[:, level - 1] = dm.connected_mask(level, home_class.appliance_count)
    return ClassModel(
        home_class=home_class,
        appliance_names=[s.appliance_name for s in filtered],
        cdfs=cdfs,
        rated_draws=rated,
        dm=dm,
        conn_matrix=conn,
    )


@dataclass
class Home:
    """One home: placement, control capability and within-hour state.

    `smart` marks homes equipped with the in-home multi-level controller;
    the rest can only be switched off wholesale at the meter. ls_lh,
    dlc_done and sl_init belong to the distributed backoff scheme.
    """

    id: int
    model: ClassModel
    smart: bool
    transformer_id: int
    feeder_id: int
    current_level: PowerLevel = PowerLevel.L5
    hour_draws: np.ndarray | None = None
    level_watts: np.ndarray | None = field(default=None, repr=False)
    ls_lh: bool = False
    dlc_done: bool = False
    sl_init: float | None = None

    @property
    def rating_w(self) -> float:
        return self.model.home_class.rating_w


def set_hour_draws(home: Home, draws) -> None:
    """Install this hour's appliance draws.

    Draws are clamped at each appliance's rated value (the rating is what
    the state caps are guaranteed against) and scaled down in proportion if
    the total would exceed the meter rating.
    """
    draws = np.minimum(np.asarray(draws, dtype=float), home.model.rated_draws)
    total = draws.sum()
    rating = home.rating_w
    if total > rating:
        draws = draws * (rating / total)
    home.hour_draws = draws
    home.level_watts = draws @ home.model.conn_matrix


def consumption(home: Home, level: PowerLevel) -> float:
    """Watts the home draws while held at `level` this hour."""
    if home.level_watts is None:
        raise RuntimeError("hour draws not set")
    return float(home.level_watts[level - 1])
