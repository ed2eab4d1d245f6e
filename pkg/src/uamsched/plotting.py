"""PNG figures for bench CSV files.

matplotlib is imported lazily so the solvers never pay for it.
"""
from __future__ import annotations

from pathlib import Path

from .bench import INCR, OK, OPTIMAL, cell_means

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.figsize": (4.8, 3.0),
    "figure.dpi": 120,
    "savefig.bbox": "tight",
}
MARKERS = {OPTIMAL: "o", INCR: "s"}
AXIS_LABEL = {"tasks": "number of tasks", "vehicles": "number of vehicles",
              "stations": "number of stations", "large": "number of vehicles"}


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _line_figure(plt, rows, sweep, column, ylabel, path, log_y=False):
    fig, ax = plt.subplots()
    drawn = False
    for algo in (OPTIMAL, INCR):
        means = cell_means(rows, sweep, algo, column)
        if not means:
            continue
        ax.plot(list(means), list(means.values()), marker=MARKERS[algo], label=algo)
        drawn = True
    if not drawn:
        plt.close(fig)
        return None
    if log_y:
        ax.set_yscale("log")
    ax.set_xlabel(AXIS_LABEL.get(sweep, sweep))
    ax.set_ylabel(ylabel)
    ax.legend(frameon=False)
    fig.savefig(path)
    plt.close(fig)
    return path


def _level_figure(plt, rows, sweep, max_level, path):
    # flying time per level summed over the sweep; level 0 is parked time
    levels = range(1, max_level + 1)
    totals = {}
    for r in rows:
        if r["sweep"] == sweep and r["status"] == OK:
            t = totals.setdefault(r["algo"], [0] * max_level)
            for i in levels:
                t[i - 1] += int(r[f"level{i}"])
    if not totals:
        return None
    fig, ax = plt.subplots()
    width = 0.8 / len(totals)
    for j, algo in enumerate(a for a in (OPTIMAL, INCR) if a in totals):
        ax.bar([i + (j - (len(totals) - 1) / 2) * width for i in levels], totals[algo],
               width=width, label=algo)
    ax.set_xticks(list(levels))
    ax.set_xlabel("flight level")
    ax.set_ylabel("vehicle-timesteps")
    ax.legend(frameon=False)
    fig.savefig(path)
    plt.close(fig)
    return path


def render(rows, out_dir, prefix: str, max_level: int) -> list:
    """Write the figures for ``rows`` into ``out_dir``; returns the written paths."""
    plt = _pyplot()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    with plt.rc_context(STYLE):
        for sweep in sorted({r["sweep"] for r in rows}):
            stem = out_dir / f"{prefix}_{sweep}"
            for path in (
                _line_figure(plt, rows, sweep, "executed", "mean executed tasks",
                             f"{stem}_executed.png"),
                _line_figure(plt, rows, sweep, "energy", "mean energy units",
                             f"{stem}_energy.png"),
                _line_figure(plt, rows, sweep, "seconds", "mean wall-clock [s]",
                             f"{stem}_runtime.png", log_y=True),
                _level_figure(plt, rows, sweep, max_level, f"{stem}_levels.png"),
            ):
                if path:
                    written.append(Path(path))
    return written
