"""Figure rendering for benchmark reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .bench import TimingReport


def render_level_profile(report: TimingReport, path: str):
    """Per-level refinement time for both procedures, with f on a twin axis."""
    rows = report.levels
    levels = [r.level for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if any(r.t_r_parallel is not None for r in rows):
        ax.plot(
            levels,
            [r.t_r_parallel if r.t_r_parallel is not None else float("nan") for r in rows],
            marker="o",
            label="parallel t_r",
        )
    if any(r.t_r_serial is not None for r in rows):
        ax.plot(
            levels,
            [r.t_r_serial if r.t_r_serial is not None else float("nan") for r in rows],
            marker="s",
            label="serial t_r",
        )
    ax.set_xlabel("tree level")
    ax.set_ylabel("refinement time (s)")
    ax.set_yscale("log")
    if any(r.f is not None for r in rows):
        ax2 = ax.twinx()
        ax2.plot(
            levels,
            [r.f if r.f is not None else float("nan") for r in rows],
            color="tab:red",
            linestyle="--",
            marker="x",
            label="f",
        )
        ax2.set_ylabel("f (distinct choices)")
        ax2.set_ylim(bottom=0)
    ax.legend(loc="upper right")
    ax.set_title("Refinement time per level")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_overhead(report: TimingReport, path: str):
    """T_a, T_s and T_p side by side; the part above T_a is the overhead."""
    labels, values = [], []
    for name, value in (("T_a", report.t_a), ("T_s", report.t_s), ("T_p", report.t_p)):
        if value is not None:
            labels.append(name)
            values.append(value)
    fig, ax = plt.subplots(figsize=(5, 4))
    bars = ax.bar(labels, values, color=["tab:gray", "tab:orange", "tab:blue"][: len(labels)])
    if report.t_a is not None:
        ax.axhline(report.t_a, color="black", linewidth=0.8)
    ax.bar_label(bars, fmt="%.3g")
    ax.set_ylabel("wall-clock seconds")
    title = "Timings"
    if report.s is not None:
        title += f" (S = {report.s:.2f})"
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
