"""Batch figure rendering from srdkf run directories.

Reads only the documented file contract of the simulator CLI
(timeseries.csv, resolved_config.json, optional robustness.csv); the
estimation code itself is never imported.  Renders are deterministic:
fixed style, no timestamps.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURES = ("errors", "alpha", "risk", "robustness")

_STYLE = {
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.0,
}

_EST_LABELS = {
    "srdkf": "set-valued DKF",
    "pvdkf": "point-valued DKF",
    "akf": "single-receiver adaptive KF",
}


class MissingColumnError(ValueError):
    """timeseries.csv lacks a column a requested figure needs."""


@dataclass(frozen=True)
class PlotJob:
    """One rendering request: run directory, figure names, output directory."""

    run_dir: Path
    figures: tuple
    out_dir: Path

    def __post_init__(self):
        for f in self.figures:
            if f not in FIGURES:
                raise ValueError(f"unknown figure {f!r}; choose from {FIGURES}")


def _read_timeseries(run_dir, needed):
    path = Path(run_dir) / "timeseries.csv"
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    for col in needed:
        if col not in header:
            raise MissingColumnError(f"timeseries.csv is missing column {col!r}")
    idx = {c: header.index(c) for c in header}
    out = {c: [] for c in header}
    for r in rows[1:]:
        for c, i in idx.items():
            out[c].append(r[i])
    return out


def _read_config(run_dir):
    path = Path(run_dir) / "resolved_config.json"
    return json.loads(path.read_text())


def _to_float(values):
    return np.array([float(v) if v != "" else np.nan for v in values])


def _attack_spans(config):
    return [(a["start_s"], a["end_s"]) for a in config.get("attacks", [])]


def _decorate_thresholds(ax, alert_limit_us, spans):
    ax.axhline(alert_limit_us, color="magenta", linestyle=":", linewidth=1.2)
    ax.axhline(-alert_limit_us, color="magenta", linestyle=":", linewidth=1.2)
    for start, end in spans:
        ax.axvline(start, color="black", linestyle=":", linewidth=0.9)
        ax.axvline(end, color="black", linestyle=":", linewidth=0.9)


def _per_receiver_series(data, value_col, est):
    """(t, {rx: series}) for one estimator, NaN for empty cells."""
    mask = [e == est for e in data["est"]]
    t = _to_float([v for v, m in zip(data["t_s"], mask) if m])
    rx = np.array([int(v) for v, m in zip(data["rx"], mask) if m])
    val = _to_float([v for v, m in zip(data[value_col], mask) if m])
    series = {}
    for r in sorted(set(rx.tolist())):
        sel = rx == r
        series[r] = (t[sel], val[sel])
    return series


def render_errors(data, config, out_path):
    ests = [e for e in _EST_LABELS if e in set(data["est"])]
    n = max(1, len(ests))
    fig, axes = plt.subplots(n, 1, figsize=(7.2, 2.6 * n), sharex=True, squeeze=False)
    spans = _attack_spans(config)
    al = config["alert_limit_us"]
    for ax, est in zip(axes[:, 0], ests):
        for r, (t, v) in _per_receiver_series(data, "dT_us", est).items():
            ax.plot(t, v, label=f"Rx:{r}")
        _decorate_thresholds(ax, al, spans)
        ax.set_ylabel("time error (us)")
        ax.set_title(_EST_LABELS[est], fontsize=9)
    if ests:
        axes[0, 0].legend(ncol=4, fontsize=7, loc="upper left")
    axes[-1, 0].set_xlabel("time (s)")
    fig.tight_layout()
    fig.savefig(out_path, metadata={"Software": "srdkf-plots"})
    plt.close(fig)


def render_alpha(data, config, out_path):
    fig, ax = plt.subplots(figsize=(7.2, 3.0))
    spans = _attack_spans(config)
    series = _per_receiver_series(data, "alpha", "srdkf")
    for r, (t, v) in series.items():
        ax.plot(t, v, label=f"Rx:{r}")
    for start, end in spans:
        ax.axvline(start, color="black", linestyle=":", linewidth=0.9)
        ax.axvline(end, color="black", linestyle=":", linewidth=0.9)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("attack status")
    ax.set_ylim(-0.05, 1.05)
    if series:
        ax.legend(ncol=4, fontsize=7, loc="center right")
    fig.tight_layout()
    fig.savefig(out_path, metadata={"Software": "srdkf-plots"})
    plt.close(fig)


def render_risk(data, config, out_path):
    fig, ax = plt.subplots(figsize=(7.2, 3.0))
    spans = _attack_spans(config)
    any_positive = False
    series = _per_receiver_series(data, "risk", "srdkf")
    for r, (t, v) in series.items():
        if np.any(np.nan_to_num(v) > 0):
            any_positive = True
        ax.plot(t, v, label=f"Rx:{r}")
    for start, end in spans:
        ax.axvline(start, color="black", linestyle=":", linewidth=0.9)
        ax.axvline(end, color="black", linestyle=":", linewidth=0.9)
    if any_positive:
        ax.set_yscale("log")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("timing risk")
    if series:
        ax.legend(ncol=4, fontsize=7, loc="lower right")
    fig.tight_layout()
    fig.savefig(out_path, metadata={"Software": "srdkf-plots"})
    plt.close(fig)


def render_robustness(run_dir, data, out_path):
    """Risk-vs-network-size boxplots.

    Uses robustness.csv (sweep aggregate) when the run directory carries
    one; otherwise falls back to per-receiver boxplots of the logged risk
    from timeseries.csv.
    """
    sweep = Path(run_dir) / "robustness.csv"
    fig, ax = plt.subplots(figsize=(7.2, 3.2))
    if sweep.exists():
        with open(sweep, newline="") as fh:
            rows = list(csv.DictReader(fh))
        mags = sorted({float(r["magnitude_us"]) for r in rows})
        sizes = sorted({int(r["n_receivers"]) for r in rows})
        width = 0.8 / max(1, len(mags))
        colors = plt.cm.viridis(np.linspace(0.1, 0.9, len(mags)))
        for j, mag in enumerate(mags):
            groups = [
                [
                    float(r["mean_risk_rx1"]) for r in rows
                    if int(r["n_receivers"]) == m and float(r["magnitude_us"]) == mag
                ]
                for m in sizes
            ]
            pos = [m + (j - (len(mags) - 1) / 2) * width for m in sizes]
            bp = ax.boxplot(
                groups, positions=pos, widths=width * 0.9, patch_artist=True,
                showfliers=False,
            )
            for box in bp["boxes"]:
                box.set_facecolor(colors[j])
            ax.plot([], [], color=colors[j], label=f"{mag:g} us meaconing")
        ax.set_xticks(sizes)
        ax.set_xticklabels([str(m) for m in sizes])
        ax.set_xlabel("receivers in the network")
        ax.legend(fontsize=7)
    else:
        series = _per_receiver_series(data, "risk", "srdkf") if data else {}
        groups = [v[~np.isnan(v)] for _, (t, v) in sorted(series.items())]
        labels = [f"Rx:{r}" for r in sorted(series)]
        groups = [g if g.size else np.array([np.nan]) for g in groups]
        if groups:
            ax.boxplot(groups, tick_labels=labels, showfliers=False)
        ax.set_xlabel("receiver")
    ax.set_ylabel("timing risk at Rx:1" if sweep.exists() else "timing risk")
    try:
        ax.set_yscale("log")
    except ValueError:
        pass
    fig.tight_layout()
    fig.savefig(out_path, metadata={"Software": "srdkf-plots"})
    plt.close(fig)


_NEEDED = {
    "errors": ("t_s", "rx", "est", "dT_us"),
    "alpha": ("t_s", "rx", "est", "alpha"),
    "risk": ("t_s", "rx", "est", "risk"),
    "robustness": ("t_s", "rx", "est", "risk"),
}


def render(job: PlotJob) -> list:
    """Render every requested figure; returns the written image paths."""
    job.out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    with plt.rc_context(_STYLE):
        config = _read_config(job.run_dir)
        for fig_name in job.figures:
            data = _read_timeseries(job.run_dir, _NEEDED[fig_name])
            out_path = job.out_dir / f"{fig_name}.png"
            if fig_name == "errors":
                render_errors(data, config, out_path)
            elif fig_name == "alpha":
                render_alpha(data, config, out_path)
            elif fig_name == "risk":
                render_risk(data, config, out_path)
            else:
                render_robustness(job.run_dir, data, out_path)
            written.append(out_path)
    return written


def main(argv=None):
    p = argparse.ArgumentParser(
        prog="srdkf-plot",
        description="Render figures from a completed srdkf run directory.",
    )
    p.add_argument("--run", required=True, help="run directory (CLI output)")
    p.add_argument("--figs", default=",".join(FIGURES),
                   help=f"comma list from {','.join(FIGURES)}")
    p.add_argument("--out", required=True, help="image output directory")
    args = p.parse_args(sys.argv[1:] if argv is None else list(argv))
    figures = tuple(f.strip() for f in args.figs.split(",") if f.strip())
    try:
        job = PlotJob(Path(args.run), figures, Path(args.out))
        for path in render(job):
            print(path)
    except (MissingColumnError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
