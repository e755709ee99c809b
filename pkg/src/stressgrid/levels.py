"""Home power states and the household utility defined over them.

Every home is always in exactly one of five states, L1 through L5. L5 is
unrestricted consumption and L1 is a full disconnect; the intermediate
states admit 75/50/25 percent of the home's rated capacity.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum


class PowerLevel(IntEnum):
    L1 = 1
    L2 = 2
    L3 = 3
    L4 = 4
    L5 = 5

    @property
    def cap_fraction(self) -> float:
        return CAP_FRACTION[self]


# Admissible fraction of rated capacity per state.
CAP_FRACTION = {
    PowerLevel.L1: 0.0,
    PowerLevel.L2: 0.25,
    PowerLevel.L3: 0.5,
    PowerLevel.L4: 0.75,
    PowerLevel.L5: 1.0,
}


@dataclass(frozen=True)
class UtilityParams:
    """Thresholds of the piecewise household utility function.

    u_max is the utility of unrestricted power, th_u and th_l the upper and
    lower comfort thresholds assigned to L4 and L2.
    """

    u_max: float = 1.0
    th_u: float = 0.6
    th_l: float = 0.4

    def __post_init__(self) -> None:
        if not (self.u_max >= self.th_u >= self.th_l >= 0.0):
            raise ValueError("utility params must satisfy u_max >= th_u >= th_l >= 0")


def utility(level: PowerLevel, params: UtilityParams) -> float:
    """Utility of one home held at `level` for the hour."""
    if level is PowerLevel.L5:
        return params.u_max
    if level is PowerLevel.L4:
        return params.th_u
    if level is PowerLevel.L3:
        return (params.th_u + params.th_l) / 2.0
    if level is PowerLevel.L2:
        return params.th_l
    return 0.0
