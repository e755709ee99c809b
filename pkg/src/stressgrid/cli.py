"""Experiment runner.

Configs are plain INI-style ``key = value`` files with bracketed section
headers. Every key has a documented default, so an empty file is a valid
config; unknown sections or keys are rejected. The sweep is the cross
product of policies, supply gaps and smart-home penetrations, with a fixed
number of runs per cell. Per-run seeds are derived from the base seed and
the cell parameters alone, so re-running any single cell reproduces the
exact files of the full sweep.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .engine import SimConfig, run
from .levels import UtilityParams
from .metrics import MetricsLog, write_report
from .policies import POLICIES, DistributionProfile
from .topology import SupplyModel


class ConfigError(Exception):
    pass


POLICY_CODES = {"baseline": 0, "distributed": 1, "centralized": 2}


def derive_seed(base_seed: int, policy: str, gap_percent: float, ap: float, run_index: int) -> int:
    """Stable per-run seed from the base seed and the cell parameters.

    entropy = (base, policy code, gap in hundredths of a percent, ap in
    hundredths of a percent, run index), hashed by numpy's SeedSequence.
    """
    entropy = (
        base_seed,
        POLICY_CODES[policy],
        int(round(gap_percent * 100)),
        int(round(ap * 10000)),
        run_index,
    )
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


@dataclass
class ExperimentSpec:
    base: SimConfig
    policies: list[str] = field(default_factory=lambda: ["baseline", "distributed", "centralized"])
    gaps_percent: list[float] = field(default_factory=lambda: [10.0, 20.0, 30.0, 40.0])
    aps: list[float] = field(default_factory=lambda: [0.3, 0.6, 0.9])
    runs: int = 10
    out_dir: str = "results"

    def cells(self) -> list[tuple[str, float, float]]:
        return [
            (policy, gap, ap)
            for policy in self.policies
            for gap in self.gaps_percent
            for ap in self.aps
        ]


def _parse_float_list(raw: str, key: str) -> list[float]:
    try:
        return [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"bad number in {key}: {raw!r}") from None


def _parse_bool(raw: str, key: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"bad boolean for {key}: {raw!r}")


# section -> key -> default (None means: documented default computed below)
_SCHEMA: dict[str, dict[str, str]] = {
    "simulation": {"horizon_hours": "24", "seed": "42", "runs": "10"},
    "topology": {
        "homes": "1000",
        "feeders": "50",
        "group_size": "10",
        "homes_per_transformer": "5",
        "grid_stations": "5",
        "class_mix": "",
        "data_dir": "builtin",
    },
    "supply": {"mode": "fractional_gap", "gaps": "10,20,30,40", "capacity_w": ""},
    "policy": {"policies": "baseline,distributed,centralized", "dp": "", "reduction_factor": "0.5"},
    "sweep": {"aps": "0.3,0.6,0.9"},
    "utility": {"u_max": "1.0", "th_u": "0.6", "th_l": "0.4"},
    "protocol": {"emulate": "false", "distance_m": "10"},
    "output": {"out_dir": "results"},
}


def _read_ini(path: Path) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with path.open() as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    values: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, value in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")
            values.setdefault(section, {})[key] = value
    return values


def parse_config(path: Path | str | None) -> ExperimentSpec:
    """Parse and validate a config file into an ExperimentSpec.

    With no path every documented default applies. Raises ConfigError on
    unknown keys, malformed values or invalid combinations.
    """
    values: dict[str, dict[str, str]] = {}
    if path is not None:
        values = _read_ini(Path(path))

    def get(section: str, key: str) -> str:
        return values.get(section, {}).get(key, _SCHEMA[section][key])

    def get_int(section: str, key: str, minimum: int = 1) -> int:
        raw = get(section, key)
        try:
            v = int(raw)
        except ValueError:
            raise ConfigError(f"bad integer for {key}: {raw!r}") from None
        if v < minimum:
            raise ConfigError(f"{key} must be at least {minimum}")
        return v

    def get_float(section: str, key: str) -> float:
        raw = get(section, key)
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"bad number for {key}: {raw!r}") from None

    mode = get("supply", "mode")
    if mode not in ("fixed_capacity", "fractional_gap"):
        raise ConfigError(f"unknown supply mode {mode!r}")
    capacity_raw = get("supply", "capacity_w")
    if mode == "fixed_capacity":
        if not capacity_raw:
            raise ConfigError("missing required key 'capacity_w' for fixed_capacity supply")
        supply = SupplyModel(mode="fixed_capacity", capacity_w=float(capacity_raw))
        gaps = [float("nan")]
    else:
        gaps = _parse_float_list(get("supply", "gaps"), "gaps")
        if not gaps:
            raise ConfigError("gaps must list at least one value")
        for g in gaps:
            if not 0.0 <= g < 100.0:
                raise ConfigError(f"gap {g:g} outside [0, 100) percent")
        supply = SupplyModel(mode="fractional_gap", gap_fraction=gaps[0] / 100.0)

    mix_raw = get("topology", "class_mix")
    if mix_raw:
        mix = tuple(_parse_float_list(mix_raw, "class_mix"))
        if len(mix) != 3:
            raise ConfigError("class_mix needs three fractions (A,B,C)")
        if abs(sum(mix) - 1.0) > 1e-6:
            raise ConfigError("class mix must sum to 1")
    else:
        mix = (1 / 3, 1 / 3, 1 / 3)

    dp_raw = get("policy", "dp")
    if dp_raw:
        alphas = _parse_float_list(dp_raw, "dp")
        if len(alphas) != 3:
            raise ConfigError("dp needs three fractions (L4,L3,L2)")
        try:
            dp = DistributionProfile(*alphas)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    else:
        dp = DistributionProfile(0.4, 0.3, 0.3)

    policies = [p.strip() for p in get("policy", "policies").split(",") if p.strip()]
    if not policies:
        raise ConfigError("policies must list at least one policy")
    for p in policies:
        if p not in POLICIES:
            raise ConfigError(f"unknown policy {p!r}")

    aps = _parse_float_list(get("sweep", "aps"), "aps")
    if not aps:
        raise ConfigError("aps must list at least one value")
    for a in aps:
        if not 0.0 <= a <= 1.0:
            raise ConfigError(f"ap {a:g} outside [0, 1]")

    try:
        utility = UtilityParams(
            u_max=get_float("utility", "u_max"),
            th_u=get_float("utility", "th_u"),
            th_l=get_float("utility", "th_l"),
        )
        base = SimConfig(
            horizon_hours=get_int("simulation", "horizon_hours"),
            n_homes=get_int("topology", "homes"),
            n_feeders=get_int("topology", "feeders"),
            group_size=get_int("topology", "group_size"),
            homes_per_transformer=get_int("topology", "homes_per_transformer"),
            n_grid_stations=get_int("topology", "grid_stations"),
            class_mix=mix,
            data_dir=get("topology", "data_dir"),
            ap=aps[0],
            supply=supply,
            policy=policies[0],
            dp=dp,
            reduction_factor=get_float("policy", "reduction_factor"),
            utility=utility,
            protocol_emulation=_parse_bool(get("protocol", "emulate"), "emulate"),
            protocol_distance_m=get_float("protocol", "distance_m"),
            seed=get_int("simulation", "seed", minimum=0),
            runs=get_int("simulation", "runs"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    return ExperimentSpec(
        base=base,
        policies=policies,
        gaps_percent=gaps,
        aps=aps,
        runs=get_int("simulation", "runs"),
        out_dir=get("output", "out_dir"),
    )


def cell_config(spec: ExperimentSpec, policy: str, gap_percent: float, ap: float, run_index: int) -> SimConfig:
    """Concrete run config for one (policy, gap, ap, run) coordinate."""
    if spec.base.supply.mode == "fractional_gap":
        supply = SupplyModel(mode="fractional_gap", gap_fraction=gap_percent / 100.0)
    else:
        supply = spec.base.supply
        gap_percent = 0.0  # fixed-capacity runs key their seeds on gap 0
    seed = derive_seed(spec.base.seed, policy, gap_percent, ap, run_index)
    return replace(spec.base, policy=policy, ap=ap, supply=supply, seed=seed)


def _worker_count(n_jobs: int) -> int:
    env = os.environ.get("STRESSGRID_THREADS")
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            cap = 1
        return min(cap, n_jobs)
    return min(os.cpu_count() or 1, n_jobs)


def run_sweep(spec: ExperimentSpec, quiet: bool = False) -> list[MetricsLog]:
    """Run every cell of the sweep; order-independent and deterministic."""
    configs = [
        cell_config(spec, policy, gap, ap, j)
        for (policy, gap, ap) in spec.cells()
        for j in range(spec.runs)
    ]
    workers = _worker_count(len(configs))
    logs: list[MetricsLog]
    if workers <= 1:
        logs = []
        for i, cfg in enumerate(configs):
            logs.append(run(cfg))
            if not quiet and (i + 1) % spec.runs == 0:
                done = (i + 1) // spec.runs
                print(f"cell {done}/{len(spec.cells())} complete")
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            logs = list(pool.map(run, configs, chunksize=1))
        if not quiet:
            print(f"{len(spec.cells())} cells complete ({workers} workers)")
    return logs


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="stressgrid",
        description="Simulate load-control policies on a stressed distribution grid.",
    )
    parser.add_argument("--config", type=Path, default=None, help="INI config file")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="base seed override")
    parser.add_argument("--runs", type=int, default=None, help="runs per cell override")
    parser.add_argument("--single", action="store_true",
                        help="run one (policy, gap, ap) cell instead of the sweep")
    parser.add_argument("--policy", choices=sorted(POLICIES), default=None,
                        help="cell policy (with --single)")
    parser.add_argument("--gap", type=float, default=None,
                        help="cell supply gap in percent (with --single)")
    parser.add_argument("--ap", type=float, default=None,
                        help="cell smart-home penetration in [0,1] (with --single)")
    parser.add_argument("--validate", action="store_true",
                        help="parse and validate the config, then exit")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    args = parser.parse_args(argv)

    try:
        if args.config is not None and not args.config.exists():
            print(f"config not found: {args.config}", file=sys.stderr)
            return 2
        spec = parse_config(args.config)
        if args.seed is not None:
            spec.base = replace(spec.base, seed=args.seed)
        if args.runs is not None:
            if args.runs < 1:
                raise ConfigError("runs must be at least 1")
            spec.runs = args.runs
        if args.out is not None:
            spec.out_dir = str(args.out)
        if args.single:
            spec.policies = [args.policy or spec.policies[0]]
            spec.gaps_percent = [args.gap if args.gap is not None else spec.gaps_percent[0]]
            spec.aps = [args.ap if args.ap is not None else spec.aps[0]]
            if spec.base.supply.mode == "fractional_gap":
                for g in spec.gaps_percent:
                    if not 0.0 <= g < 100.0:
                        raise ConfigError(f"gap {g:g} outside [0, 100) percent")
            for a in spec.aps:
                if not 0.0 <= a <= 1.0:
                    raise ConfigError(f"ap {a:g} outside [0, 1]")

        n_cells = len(spec.cells())
        if args.validate:
            print(f"config ok: {n_cells} cells x {spec.runs} runs")
            return 0

        logs = run_sweep(spec, quiet=args.quiet)
        try:
            written = write_report(logs, spec.out_dir)
        except OSError as exc:
            print(f"cannot write report: {exc}", file=sys.stderr)
            return 2
        if not args.quiet:
            print(f"wrote {len(written)} files under {spec.out_dir}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
