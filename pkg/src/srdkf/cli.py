"""Command-line front end: presets, scenario files, CSV/JSON emission."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from srdkf.netsim import (
    ESTIMATORS,
    ROBUSTNESS_MAGNITUDES_US,
    ROBUSTNESS_NETWORK_SIZES,
    AttackSpec,
    IntervalBounds,
    NetworkGraph,
    NoiseBounds,
    Scenario,
    SimLog,
    preset_coordinated,
    preset_none,
    preset_robustness_cell,
    run_scenario,
)

__all__ = ["RunConfig", "parse_config", "emit_timeseries", "main"]

CSV_HEADER = [
    "k", "t_s", "rx", "truth_T_us", "truth_Tdot_nsps",
    "est", "dT_us", "dTdot_nsps", "alpha", "risk",
]

_US = 1e-6
_US2 = 1e-12
_NSPS = 1e-9
_NSPS2 = 1e-18

# scenario-file field name -> SI factor, per bound channel
_BOUND_KEYS = {
    "process_T": ("us", _US, _US2),
    "process_Tdot": ("nsps", _NSPS, _NSPS2),
    "meas_pseudorange": ("us", _US, _US2),
    "meas_doppler": ("nsps", _NSPS, _NSPS2),
    "init_T": ("us", _US, _US2),
    "init_Tdot": ("nsps", _NSPS, _NSPS2),
}


class ConfigError(ValueError):
    """Scenario-file validation failure, carrying the offending path."""


@dataclass(frozen=True)
class RunConfig:
    """Resolved command-line request."""

    preset: str | None
    scenario_path: str | None
    out_dir: Path
    estimators: tuple
    runs: int
    seed: int
    compute_risk: bool


def _fmt(x) -> str:
    return f"{x:.17g}"


def _require(cond, path, msg):
    if not cond:
        raise ConfigError(f"{path}: {msg}")


def _take(obj, path, key, kind, default=None, required=False):
    if key not in obj:
        if required:
            raise ConfigError(f"{path}.{key}: missing required field")
        return default
    val = obj.pop(key)
    if kind is float and isinstance(val, int):
        val = float(val)
    _require(isinstance(val, kind), f"{path}.{key}", f"expected {kind.__name__}")
    return val


def _no_leftovers(obj, path):
    if obj:
        key = sorted(obj)[0]
        raise ConfigError(f"{path}.{key}: unknown field")


def _parse_bounds(obj, path):
    channels = {}
    for name, (suffix, mfac, cfac) in _BOUND_KEYS.items():
        sub = _take(obj, path, name, dict, required=True)
        sp = f"{path}.{name}"
        lo = _take(sub, sp, f"mean_lo_{suffix}", float, required=True)
        hi = _take(sub, sp, f"mean_hi_{suffix}", float, required=True)
        ch = _take(sub, sp, f"cov_hi_{suffix}2", float, required=True)
        _no_leftovers(sub, sp)
        try:
            channels[name] = IntervalBounds(lo * mfac, hi * mfac, ch * cfac)
        except ValueError as exc:
            raise ConfigError(f"{sp}: {exc}") from exc
    _no_leftovers(obj, path)
    return NoiseBounds(**channels)


def _parse_attack(obj, path):
    victim = _take(obj, path, "victim_rx", int, required=True)
    kind = _take(obj, path, "kind", str, required=True)
    start = _take(obj, path, "start_s", float, required=True)
    end = _take(obj, path, "end_s", float, required=True)
    if kind == "meaconing":
        mag = _take(obj, path, "magnitude_us", float, required=True) * _US
    elif kind == "ramp":
        mag = _take(obj, path, "rate_nsps", float, required=True) * _NSPS
    else:
        raise ConfigError(f"{path}.kind: unknown attack kind {kind!r}")
    _no_leftovers(obj, path)
    try:
        return AttackSpec(victim, kind, start, end, mag)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def parse_scenario_file(data) -> Scenario:
    """Validate a scenario dict (parsed JSON) into a Scenario.

    Unknown keys are rejected with their path; units are explicit in the
    key names and converted to SI here.
    """
    _require(isinstance(data, dict), "$", "scenario file must hold a JSON object")
    obj = dict(data)
    path = "$"
    n_rx = _take(obj, path, "n_receivers", int, required=True)
    edges = _take(obj, path, "edges", list, required=True)
    for i, e in enumerate(edges):
        _require(
            isinstance(e, list) and len(e) == 2 and all(isinstance(v, int) for v in e),
            f"$.edges[{i}]", "expected a pair of 1-based receiver ids",
        )
    try:
        graph = NetworkGraph.from_edges(n_rx, [tuple(e) for e in edges])
    except ValueError as exc:
        raise ConfigError(f"$.edges: {exc}") from exc

    attacks = []
    for i, a in enumerate(_take(obj, path, "attacks", list, default=[])):
        _require(isinstance(a, dict), f"$.attacks[{i}]", "expected an object")
        attacks.append(_parse_attack(dict(a), f"$.attacks[{i}]"))

    bounds = _parse_bounds(
        dict(_take(obj, path, "noise_bounds", dict, required=True)), "$.noise_bounds"
    )
    kwargs = dict(
        graph=graph,
        n_satellites=_take(obj, path, "n_satellites", int, required=True),
        dt_s=_take(obj, path, "dt_s", float, required=True),
        duration_s=_take(obj, path, "duration_s", float, required=True),
        attacks=tuple(attacks),
        bounds=bounds,
        psi=_take(obj, path, "psi", float, required=True),
        gamma=_take(obj, path, "gamma", float, required=True),
        levels=_take(obj, path, "levels", int, required=True),
        alert_limit_s=_take(obj, path, "alert_limit_us", float, required=True) * _US,
        rng_seed=_take(obj, path, "rng_seed", int, required=True),
        noise_redraw_period_s=_take(obj, path, "noise_redraw_period_s", float, default=30.0),
        inflation=_take(obj, path, "inflation", float, default=3.0),
        physical_h=_take(obj, path, "physical_h", bool, default=False),
        broadcast_delay_rounds=_take(obj, path, "broadcast_delay_rounds", int, default=0),
    )
    _no_leftovers(obj, path)
    try:
        return Scenario(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"$: {exc}") from exc


def scenario_to_dict(s: Scenario) -> dict:
    """Inverse of parse_scenario_file (explicit units in key names)."""
    bounds = {}
    for name, (suffix, mfac, cfac) in _BOUND_KEYS.items():
        b = getattr(s.bounds, name)
        bounds[name] = {
            f"mean_lo_{suffix}": b.mean_lo / mfac,
            f"mean_hi_{suffix}": b.mean_hi / mfac,
            f"cov_hi_{suffix}2": b.cov_hi / cfac,
        }
    attacks = []
    for a in s.attacks:
        d = {"victim_rx": a.victim, "kind": a.kind, "start_s": a.start_s, "end_s": a.end_s}
        if a.kind == "meaconing":
            d["magnitude_us"] = a.magnitude / _US
        else:
            d["rate_nsps"] = a.magnitude / _NSPS
        attacks.append(d)
    return {
        "n_receivers": s.graph.n_receivers,
        "edges": [list(e) for e in s.graph.edge_list()],
        "n_satellites": s.n_satellites,
        "dt_s": s.dt_s,
        "duration_s": s.duration_s,
        "attacks": attacks,
        "noise_bounds": bounds,
        "psi": s.psi,
        "gamma": s.gamma,
        "levels": s.levels,
        "alert_limit_us": s.alert_limit_s / _US,
        "rng_seed": s.rng_seed,
        "noise_redraw_period_s": s.noise_redraw_period_s,
        "inflation": s.inflation,
        "physical_h": s.physical_h,
        "broadcast_delay_rounds": s.broadcast_delay_rounds,
    }


def _build_parser():
    p = argparse.ArgumentParser(
        prog="srdkf",
        description=(
            "Set-valued distributed Kalman filtering simulator for secure "
            "GPS timing over a receiver network."
        ),
    )
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a preset or scenario file")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument(
        "--preset", choices=("coordinated", "robustness", "none"),
        help="built-in experiment (mutually exclusive with --scenario)",
    )
    src.add_argument("--scenario", help="path to a scenario JSON file")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, default=0, help="base RNG seed (default 0)")
    run.add_argument("--runs", type=int, default=1,
                     help="Monte-Carlo repetitions (seeds seed..seed+runs-1)")
    run.add_argument("--estimators", default="srdkf,pvdkf,akf",
                     help="comma list from {srdkf,pvdkf,akf}")
    run.add_argument("--no-risk", action="store_true",
                     help="skip per-round timing-risk evaluation")
    return p


def parse_config(argv):
    """Parse CLI arguments (and scenario file, if any) into a run request."""
    args = _build_parser().parse_args(argv)
    estimators = tuple(e.strip() for e in args.estimators.split(",") if e.strip())
    for e in estimators:
        if e not in ESTIMATORS:
            raise ConfigError(f"--estimators: unknown estimator {e!r}")
    if not estimators:
        raise ConfigError("--estimators: need at least one estimator")
    config = RunConfig(
        preset=args.preset,
        scenario_path=args.scenario,
        out_dir=Path(args.out),
        estimators=estimators,
        runs=args.runs,
        seed=args.seed,
        compute_risk=not args.no_risk,
    )
    scenario = None
    if args.scenario is not None:
        try:
            data = json.loads(Path(args.scenario).read_text())
        except OSError as exc:
            raise ConfigError(f"--scenario: cannot read {args.scenario}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--scenario: invalid JSON: {exc}") from exc
        scenario = parse_scenario_file(data)
    elif args.preset == "coordinated":
        scenario = preset_coordinated(seed=args.seed)
    elif args.preset == "none":
        scenario = preset_none(seed=args.seed)
    # the robustness preset expands into a sweep at run time
    return config, scenario


def emit_timeseries(log: SimLog, out_dir) -> dict:
    """Write timeseries.csv, summary.json, resolved_config.json for one run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    s = log.scenario
    times = s.times()
    with open(out / "timeseries.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(CSV_HEADER)
        for k in range(log.n_rounds):
            for i in range(s.graph.n_receivers):
                for est in log.estimators:
                    err = log.errors[est][k, i]
                    if est == "srdkf":
                        alpha = _fmt(log.alpha[k, i])
                        risk = "" if np.isnan(log.risk[k, i]) else _fmt(log.risk[k, i])
                    else:
                        alpha = ""
                        risk = ""
                    w.writerow([
                        k,
                        _fmt(times[k]),
                        i + 1,
                        _fmt(log.truth[k, 0] / _US),
                        _fmt(log.truth[k, 1] / _NSPS),
                        est,
                        _fmt(err[0] / _US),
                        _fmt(err[1] / _NSPS),
                        alpha,
                        risk,
                    ])
    summary = log.summary()
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    with open(out / "resolved_config.json", "w") as fh:
        json.dump(scenario_to_dict(s), fh, indent=2)
        fh.write("\n")
    return summary


def _run_one(scenario, config, out_dir):
    log = run_scenario(scenario, estimators=config.estimators,
                       compute_risk=config.compute_risk)
    emit_timeseries(log, out_dir)
    return log


def _run_many(scenario, config, out_dir):
    if config.runs <= 1:
        _run_one(replace(scenario, rng_seed=config.seed), config, out_dir)
        return
    for r in range(config.runs):
        _run_one(
            replace(scenario, rng_seed=config.seed + r),
            config,
            Path(out_dir) / f"run_{r:03d}",
        )


def _run_robustness_sweep(config):
    """Meaconing sweep: fully connected |M| = 2..7 x four magnitudes."""
    rows = []
    for m in ROBUSTNESS_NETWORK_SIZES:
        for mag in ROBUSTNESS_MAGNITUDES_US:
            cell_dir = config.out_dir / f"cell_M{m}_mag{mag:g}us"
            for r in range(config.runs):
                sc = preset_robustness_cell(m, mag, seed=config.seed + r)
                log = _run_one(sc, config, cell_dir / f"run_{r:03d}")
                win = log.attack_window_mask(1)
                mean_risk = (
                    float(np.nanmean(log.risk[win, 0]))
                    if config.compute_risk and win.any()
                    else float("nan")
                )
                rows.append({
                    "n_receivers": m,
                    "magnitude_us": mag,
                    "seed": config.seed + r,
                    "mean_risk_rx1": mean_risk,
                    "max_abs_dT_us_rx1": float(
                        np.max(np.abs(log.errors["srdkf"][:, 0, 0])) / _US
                    ) if "srdkf" in log.estimators else float("nan"),
                })
    with open(config.out_dir / "robustness.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["n_receivers", "magnitude_us", "seed", "mean_risk_rx1",
                    "max_abs_dT_us_rx1"])
        for row in rows:
            w.writerow([
                row["n_receivers"], _fmt(row["magnitude_us"]), row["seed"],
                _fmt(row["mean_risk_rx1"]), _fmt(row["max_abs_dT_us_rx1"]),
            ])


def main(argv=None):
    try:
        config, scenario = parse_config(
            sys.argv[1:] if argv is None else list(argv)
        )
        config.out_dir.mkdir(parents=True, exist_ok=True)
        if config.preset == "robustness":
            _run_robustness_sweep(config)
        else:
            _run_many(scenario, config, config.out_dir)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
