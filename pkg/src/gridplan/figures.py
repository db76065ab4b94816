"""Figure rendering for plan reports.

PNG companions to the delimited tables: convergence, cost and emission
trajectories, stage energy shares and a dispatch stack. Uses the Agg
backend so rendering works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .report import PlanReport

_SOURCE_COLORS = {
    "thermal": "#8c564b",
    "wind": "#1f77b4",
    "pv": "#ff7f0e",
    "bes": "#2ca02c",
}


def plot_convergence(trace, path) -> None:
    """Bound trajectories over decomposition iterations."""
    its = [r.iteration for r in trace]
    lb = [r.lower_bound for r in trace]
    ub = [r.upper_bound for r in trace]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(its, lb, marker="o", label="lower bound")
    finite = [(i, u) for i, u in zip(its, ub) if np.isfinite(u)]
    if finite:
        ax.plot(*zip(*finite), marker="s", label="incumbent")
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective ($)")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_trajectories(report: PlanReport, path) -> None:
    """Cumulative cost per served MWh and emission factor by stage."""
    stages = np.arange(1, report.stage_count + 1)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.5, 3.6))
    ax1.plot(stages, report.lcoe_cumulative, marker="o", color="#d62728")
    ax1.set_xlabel("stage")
    ax1.set_ylabel("cumulative cost of served energy ($/MWh)")
    ax1.set_xticks(stages)
    ax1.grid(alpha=0.3)
    ax2.plot(stages, report.emission_factor_cumulative, marker="o",
             color="#7f7f7f")
    ax2.set_xlabel("stage")
    ax2.set_ylabel("cumulative emission factor (t/MWh)")
    ax2.set_xticks(stages)
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_shares(report: PlanReport, path) -> None:
    """Stage energy shares by source, stacked to one."""
    stages = np.arange(1, report.stage_count + 1)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    bottom = np.zeros(len(stages))
    for src in ("thermal", "wind", "pv", "bes"):
        vals = np.array([sh[src] for sh in report.shares])
        ax.bar(stages, vals, bottom=bottom, label=src,
               color=_SOURCE_COLORS[src], width=0.6)
        bottom += vals
    ax.set_xlabel("stage")
    ax.set_ylabel("share of served energy")
    ax.set_xticks(stages)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_dispatch(stack_rows: list, stage: int, path) -> None:
    """Supply stack across representative hours for one stage."""
    hours = np.arange(len(stack_rows))
    labels = [str(r["hour"]) for r in stack_rows]
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    bottom = np.zeros(len(hours))
    for src, col in (("thermal", "thermal"), ("wind", "wind"), ("pv", "pv"),
                     ("bes", "bes_discharge")):
        vals = np.array([r[col] for r in stack_rows])
        ax.bar(hours, vals, bottom=bottom, label=src,
               color=_SOURCE_COLORS[src], width=0.7)
        bottom += vals
    load = np.array([r["load_mw"] for r in stack_rows])
    ax.plot(hours, load, color="black", marker=".", linewidth=1.2,
            label="load")
    shed = np.array([r["shed"] for r in stack_rows])
    if shed.max() > 1e-9:
        ax.bar(hours, shed, bottom=bottom, label="shed", color="#e377c2",
               width=0.7, hatch="//")
    ax.set_xticks(hours)
    ax.set_xticklabels(labels)
    ax.set_xlabel("representative hour")
    ax.set_ylabel("MW")
    ax.set_title(f"stage {stage} dispatch")
    ax.legend(ncols=3, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_figures(report: PlanReport, stack_rows: list, stage: int,
                   outdir, trace=None) -> list:
    """Write every applicable figure; returns written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    p = outdir / "trajectories.png"
    plot_trajectories(report, p)
    written.append(p)
    p = outdir / "shares.png"
    plot_shares(report, p)
    written.append(p)
    p = outdir / f"dispatch_stage{stage}.png"
    plot_dispatch(stack_rows, stage, p)
    written.append(p)
    if trace:
        p = outdir / "convergence.png"
        plot_convergence(trace, p)
        written.append(p)
    return written
