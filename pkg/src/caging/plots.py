"""Figure rendering for study reports.

All figures are written as PNG files through the Agg backend with fixed
sizes and stripped writer metadata, so rerunning a study overwrites them
byte-identically (except the timing figure, whose underlying wall-clock
measurements naturally vary between runs).
"""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = [
    "save_auc_vs_field_size",
    "save_timing_vs_field_size",
    "save_perturbation_ap",
]

_PNG_KWARGS = {"metadata": {"Software": None}, "dpi": 120}

_METRIC_STYLE = {
    "omega_cap": ("tab:blue", "o"),
    "omega_suc": ("tab:cyan", "s"),
    "omega_esc_est": ("tab:green", "^"),
    "omega_esc_rrt": ("tab:olive", "v"),
    "omega_force": ("tab:red", "d"),
}


def _finish(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, **_PNG_KWARGS)
    plt.close(fig)


def save_auc_vs_field_size(sweep_rows: Sequence[tuple], path) -> None:
    """Median trajectory-success AUC versus field size, with min-max band.

    ``sweep_rows`` are (M, median, lo, hi) tuples.
    """
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    if sweep_rows:
        ms = [r[0] for r in sweep_rows]
        med = [r[1] for r in sweep_rows]
        lo = [r[2] for r in sweep_rows]
        hi = [r[3] for r in sweep_rows]
        ax.fill_between(ms, lo, hi, alpha=0.25, color="tab:blue",
                        linewidth=0.0)
        ax.plot(ms, med, "o-", color="tab:blue")
        ax.set_xscale("log")
    ax.set_xlabel("field size M (samples)")
    ax.set_ylabel("trajectory success AUC")
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, alpha=0.3)
    _finish(fig, path)


def save_timing_vs_field_size(timing_rows: Sequence[tuple], path) -> None:
    """Mean field-growth wall clock versus field size, with min-max band."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    if timing_rows:
        ms = [r[0] for r in timing_rows]
        mean = [r[1] for r in timing_rows]
        lo = [r[2] for r in timing_rows]
        hi = [r[3] for r in timing_rows]
        ax.fill_between(ms, lo, hi, alpha=0.25, color="tab:orange",
                        linewidth=0.0)
        ax.plot(ms, mean, "o-", color="tab:orange")
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("field size M (samples)")
    ax.set_ylabel("growth wall clock (s)")
    ax.grid(True, alpha=0.3, which="both")
    _finish(fig, path)


def save_perturbation_ap(perturb_rows: Sequence[tuple], path) -> None:
    """Average precision of each metric as input noise increases.

    ``perturb_rows`` are (kind, metric, level, e_max, ap) tuples; one
    line is drawn per (kind, metric) pair over the noise levels.
    """
    fig, ax = plt.subplots(figsize=(5.6, 3.4))
    series: dict[tuple, list[tuple]] = {}
    for kind, metric, level, e_max, ap in perturb_rows:
        series.setdefault((kind, metric), []).append((level, ap))
    for (kind, metric) in sorted(series):
        pts = sorted(series[(kind, metric)])
        color, marker = _METRIC_STYLE.get(metric, ("tab:gray", "x"))
        ax.plot([p[0] for p in pts], [p[1] for p in pts],
                marker=marker, color=color, linestyle="-",
                label=f"{metric} / {kind} noise")
    ax.set_xlabel("noise level (fraction of max amplitude)")
    ax.set_ylabel("average precision")
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, alpha=0.3)
    if series:
        ax.legend(fontsize=7, loc="lower left")
    _finish(fig, path)
