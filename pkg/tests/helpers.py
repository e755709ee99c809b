"""Checkers shared between the unit suite and the acceptance suite."""

from __future__ import annotations

from itertools import product

from stressgrid.homes import Home
from stressgrid.levels import PowerLevel
from stressgrid.policies import DistributionProfile, alg1_home_decision
from stressgrid.protocol import decode, encode


def alpha_grid(step: float = 0.1):
    """All (alpha_l4, alpha_l3, alpha_l2) on the grid that sum to 1."""
    n = round(1.0 / step)
    combos = []
    for i in range(n + 1):
        for j in range(n + 1 - i):
            k = n - i - j
            combos.append((i * step, j * step, k * step))
    return combos


def check_branch_partition(model, sl_values) -> int:
    """Exhaustively drive the backoff branch logic.

    For every (alphas, sl, r) triple a fresh home must either receive
    exactly one of L4/L3/L2 (when r < sl) or stay put (when r >= sl).
    Returns the number of triples checked; raises AssertionError on any
    violation.
    """
    home = Home(id=0, model=model, smart=True, transformer_id=0, feeder_id=0)
    backoff_levels = {PowerLevel.L4, PowerLevel.L3, PowerLevel.L2}
    checked = 0
    for alphas in alpha_grid():
        dp = DistributionProfile(*alphas)
        for sl in sl_values:
            for r in range(1, 101):
                home.dlc_done = False
                home.sl_init = None
                home.ls_lh = False
                home.current_level = PowerLevel.L5
                got = alg1_home_decision(home, float(sl), dp, False, r)
                if r < sl:
                    assert got in backoff_levels, (alphas, sl, r, got)
                else:
                    assert got is None, (alphas, sl, r, got)
                checked += 1
    return checked


def check_frame_round_trip() -> int:
    """encode/decode identity for all 32 relay patterns x 5 frame slots."""
    patterns = [tuple(bool(b >> k & 1) for k in range(5)) for b in range(32)]
    cases = 0
    for pattern, slot in product(patterns, range(5)):
        columns = [(False,) * 5] * 5
        columns = list(columns)
        columns[slot] = pattern
        frame = encode(columns)
        assert len(frame) == 5
        assert decode(frame, slot + 1) == pattern
        for other in range(5):
            if other != slot:
                assert decode(frame, other + 1) == (False,) * 5
        cases += 1
    return cases
