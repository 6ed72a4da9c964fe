"""Result tables (CSV and markdown) and report figures.

Accuracies render with exactly four decimal places and a '.' separator
regardless of locale; the gap column is always recomputed from the reference
and accuracy at emission time.  Figures are rendered headless (Agg) to files
next to the delimited output.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

__all__ = [
    "ResultRow",
    "COLUMNS",
    "emit_table",
    "pivot_markdown",
    "write_metrics_csv",
    "save_training_curves",
    "save_benchmark_chart",
]

COLUMNS = ("algorithm", "start", "blend", "seeds", "accuracy",
           "accuracy_std", "reference", "gap")


@dataclass
class ResultRow:
    """One result line: a single run (seeds = its seed) or an aggregate over
    seeds (seeds = the count, accuracy/std = mean/std)."""

    algorithm: str
    start: str
    blend: bool
    seeds: str
    accuracy: float
    accuracy_std: float | None = None
    reference: float | None = None


def _fmt(x: float | None) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.4f}"


def _cells(row: ResultRow) -> list[str]:
    gap = None
    if row.reference is not None and not math.isnan(row.accuracy):
        gap = row.reference - row.accuracy
    return [row.algorithm, row.start, "on" if row.blend else "off", row.seeds,
            _fmt(row.accuracy), _fmt(row.accuracy_std), _fmt(row.reference), _fmt(gap)]


def emit_table(rows, fmt: str = "csv") -> str:
    """Render rows as RFC-quoted CSV or a markdown pipe table."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow(_cells(row))
        return buf.getvalue()
    if fmt == "markdown":
        lines = ["| " + " | ".join(COLUMNS) + " |",
                 "|" + "|".join(" --- " for _ in COLUMNS) + "|"]
        for row in rows:
            lines.append("| " + " | ".join(_cells(row)) + " |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"fmt must be 'csv' or 'markdown', got {fmt!r}")


_PIVOT_ALGOS = ("none", "median_bc", "bc", "br")
_PIVOT_HEADERS = ("32bit", "median_bc", "bc", "br")


def pivot_markdown(rows) -> str:
    """Start-mode rows by algorithm columns, for eyeballing against the usual
    accuracy-table layout.  Cells show mean accuracy, with +/- std when an
    aggregate row carries one."""
    def start_key(row: ResultRow) -> str:
        return row.start + ("+blend" if row.blend else "")

    cells: dict[tuple[str, str], str] = {}
    starts: list[str] = []
    for row in rows:
        sk = start_key(row)
        if sk not in starts:
            starts.append(sk)
        text = _fmt(row.accuracy)
        if row.accuracy_std is not None and text:
            text += f" +/- {_fmt(row.accuracy_std)}"
        cells[(sk, row.algorithm)] = text

    lines = ["| start | " + " | ".join(_PIVOT_HEADERS) + " |",
             "|" + "|".join(" --- " for _ in range(len(_PIVOT_HEADERS) + 1)) + "|"]
    for sk in starts:
        row_cells = [cells.get((sk, alg), "") for alg in _PIVOT_ALGOS]
        lines.append("| " + sk + " | " + " | ".join(row_cells) + " |")
    return "\n".join(lines) + "\n"


def write_metrics_csv(path, metrics) -> None:
    """Per-epoch log: rows of (iteration, train_loss, test_accuracy)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("iteration", "train_loss", "test_accuracy"))
        for iteration, loss, acc in metrics:
            writer.writerow((iteration, f"{loss:.6f}", f"{acc:.4f}"))


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def save_training_curves(metrics, path) -> None:
    """Loss and test accuracy against iteration, one panel each."""
    plt = _plt()
    its = [m[0] for m in metrics]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.plot(its, [m[1] for m in metrics], marker=".")
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("train loss")
    ax2.plot(its, [m[2] for m in metrics], marker=".", color="tab:green")
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("test accuracy")
    ax2.set_ylim(0.0, 1.0)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_benchmark_chart(rows, path) -> None:
    """Grouped bars of mean accuracy per (start mode, algorithm) cell."""
    plt = _plt()
    rows = list(rows)
    groups: list[str] = []
    for row in rows:
        g = row.start + ("+blend" if row.blend else "")
        if g not in groups:
            groups.append(g)
    algos = [a for a in _PIVOT_ALGOS if any(r.algorithm == a for r in rows)]
    fig, ax = plt.subplots(figsize=(1.8 * max(len(groups), 2) + 2, 3.8))
    width = 0.8 / max(len(algos), 1)
    for j, alg in enumerate(algos):
        xs, ys, es = [], [], []
        for i, g in enumerate(groups):
            for row in rows:
                if row.algorithm == alg and row.start + ("+blend" if row.blend else "") == g:
                    xs.append(i + j * width)
                    ys.append(0.0 if math.isnan(row.accuracy) else row.accuracy)
                    es.append(row.accuracy_std or 0.0)
        label = "32bit" if alg == "none" else alg
        ax.bar(xs, ys, width=width * 0.9, yerr=es, capsize=2, label=label)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(groups))])
    ax.set_xticklabels(groups)
    ax.set_ylabel("test accuracy")
    ax.set_ylim(0.0, 1.0)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
