"""Render the strategy-comparison figure from a sweep CSV.

The input is the delimited output of `qiphase sweep`: one row per grid
point with columns d, T, b, iq1, iq2, iq3 (plus diagnostics).  The figure
shows the entangled-strategy values iq2 as markers against d, with the
d-independent iq1 and iq3 levels drawn as solid and dashed horizontal
lines, one colour per grouping value (transmissivity by default).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

FIGSIZE = (7.0, 4.5)
DPI = 150
REQUIRED_COLUMNS = ("d", "iq1", "iq2", "iq3")


class FigplotError(ValueError):
    """Bad input data: missing columns or nothing to plot."""


@dataclass(frozen=True)
class PlotConfig:
    input_csv: str
    output_image: str
    y_log: bool = True
    group_col: str = "T"


def read_rows(path: str, group_col: str) -> list[dict]:
    """Load and type the sweep rows, validating the required columns."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        for col in REQUIRED_COLUMNS + (group_col,):
            if col not in fields:
                raise FigplotError(f"input CSV is missing required column '{col}'")
        rows = []
        for rec in reader:
            rows.append({
                "d": int(rec["d"]),
                "group": float(rec[group_col]),
                "iq1": float(rec["iq1"]),
                "iq2": float(rec["iq2"]),
                "iq3": float(rec["iq3"]),
            })
    if not rows:
        raise FigplotError("input CSV contains no data rows")
    return rows


def _padded_limits(values: list[float], y_log: bool) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    if y_log:
        lo = max(lo, 1e-300)
        span = max(math.log10(hi) - math.log10(lo), 1e-6)
        return 10 ** (math.log10(lo) - 0.1 * span), 10 ** (math.log10(hi) + 0.1 * span)
    span = max(hi - lo, 1e-12)
    return lo - 0.1 * span, hi + 0.1 * span


def build_figure(rows: list[dict], config: PlotConfig):
    """Assemble the figure; exposed separately so tests can inspect it."""
    groups = sorted({row["group"] for row in rows}, reverse=True)
    fig, ax = plt.subplots(figsize=FIGSIZE)
    everything = []
    for i, value in enumerate(groups):
        sub = sorted((r for r in rows if r["group"] == value), key=lambda r: r["d"])
        color = f"C{i}"
        d = [r["d"] for r in sub]
        iq2 = [r["iq2"] for r in sub]
        ax.plot(d, iq2, linestyle="none", marker="o", markersize=3, color=color,
                label=f"{config.group_col}={value:g}")
        ax.plot([d[0], d[-1]], [sub[0]["iq1"]] * 2, linestyle="-", color=color,
                linewidth=1.0, label="_nolegend_")
        ax.plot([d[0], d[-1]], [sub[0]["iq3"]] * 2, linestyle="--", color=color,
                linewidth=1.0, label="_nolegend_")
        everything.extend(iq2 + [sub[0]["iq1"], sub[0]["iq3"]])
    if config.y_log:
        ax.set_yscale("log")
    ax.set_ylim(*_padded_limits(everything, config.y_log))
    ax.set_xlabel("entangled modes d")
    ax.set_ylabel("Fisher information per trial")
    ax.legend(loc="best")
    fig.tight_layout()
    return fig


def render(config: PlotConfig) -> None:
    """Read the CSV and write the figure to the configured image path."""
    rows = read_rows(config.input_csv, config.group_col)
    fig = build_figure(rows, config)
    try:
        fig.savefig(config.output_image, dpi=DPI)
    finally:
        plt.close(fig)
