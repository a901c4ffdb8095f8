"""Rendering of trend reports: CSV grid and PNG heatmap.

The grid mirrors the evaluation layout: one row per (emotion, prosody
feature), one column per control condition, cell values are Spearman rho
with trend sign, shaded by whether the sign matches the expected table.
"""

from __future__ import annotations

import csv
import io
import json
from importlib import resources

import matplotlib

matplotlib.use("Agg")  # headless rendering only
import matplotlib.pyplot as plt
import numpy as np

from .evaluate import CONDITIONS, PROSODY_FEATURES, TrendReport


def load_expected_signs(path: str | None = None) -> dict:
    """Expected trend-direction table; falls back to the packaged default."""
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    ref = resources.files("hedkit.data").joinpath("expected_signs.json")
    return json.loads(ref.read_text(encoding="utf-8"))


def _row_order(report: TrendReport) -> list[tuple[str, str]]:
    emotions = sorted({c.emotion for c in report.cells})
    return [(e, f) for e in emotions for f in PROSODY_FEATURES]


def trend_grid_csv(report: TrendReport) -> str:
    """Delimited grid: emotion, feature, then one rho column per condition
    plus a sign-match column per condition."""
    grid = report.grid()
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["emotion", "feature", "expected_sign"]
    for cond in CONDITIONS:
        header += [f"rho_{cond}", f"sign_{cond}", f"match_{cond}"]
    writer.writerow(header)
    for emotion, feature in _row_order(report):
        cell_row = grid.get(feature, {}).get(emotion, {})
        expected = ""
        for cond in CONDITIONS:
            cell = cell_row.get(cond)
            if cell is not None and cell.expected_sign is not None:
                expected = cell.expected_sign
        row = [emotion, feature, expected]
        for cond in CONDITIONS:
            cell = cell_row.get(cond)
            if cell is None:
                row += ["", "", ""]
            else:
                match = cell.matches_expected
                row += [
                    repr(cell.rho),
                    cell.sign,
                    "" if match is None else str(match).lower(),
                ]
        writer.writerow(row)
    return buf.getvalue()


def render_trend_heatmap(report: TrendReport, out_path: str) -> None:
    """PNG heatmap of rho per (emotion x feature) row and condition column."""
    rows = _row_order(report)
    grid = report.grid()
    values = np.full((len(rows), len(CONDITIONS)), np.nan)
    annotations = [["" for _ in CONDITIONS] for _ in rows]
    for r, (emotion, feature) in enumerate(rows):
        for c, cond in enumerate(CONDITIONS):
            cell = grid.get(feature, {}).get(emotion, {}).get(cond)
            if cell is None:
                continue
            values[r, c] = cell.rho
            mark = ""
            if cell.matches_expected is True:
                mark = " ✓"
            elif cell.matches_expected is False:
                mark = " ✗"
            annotations[r][c] = f"{cell.rho:+.2f}{mark}"

    height = max(2.0, 0.38 * len(rows) + 1.2)
    fig, ax = plt.subplots(figsize=(7.5, height))
    masked = np.ma.masked_invalid(values)
    im = ax.imshow(masked, cmap="coolwarm", vmin=-1.0, vmax=1.0, aspect="auto")
    ax.set_xticks(range(len(CONDITIONS)), CONDITIONS)
    ax.set_yticks(
        range(len(rows)),
        [f"{emotion} / {feature}" for emotion, feature in rows],
        fontsize=7,
    )
    for r in range(len(rows)):
        for c in range(len(CONDITIONS)):
            if annotations[r][c]:
                ax.text(c, r, annotations[r][c], ha="center", va="center", fontsize=6)
    ax.set_xlabel("control condition")
    ax.set_title("Spearman rho of prosody features vs. edited intensity")
    fig.colorbar(im, ax=ax, label="rho")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
