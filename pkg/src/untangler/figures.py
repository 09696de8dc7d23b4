"""Matplotlib renderings saved alongside the delimited report files.

All figures are written as PNG through the Agg backend with fixed styling so
repeated runs produce byte-identical files.
"""

from __future__ import annotations

import io
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from untangler.ingest import write_bytes_atomic

_BAR_COLOR = "#4878a8"
_ACCENT = "#c44e52"


def _save(fig, path: str | Path) -> None:
    buffer = io.BytesIO()
    fig.savefig(buffer, format="png", dpi=110)
    plt.close(fig)
    write_bytes_atomic(path, buffer.getvalue())


def metrics_bars(metrics: Mapping[str, float | None], path: str | Path,
                 title: str = "classification metrics") -> None:
    names = [k for k, v in metrics.items() if v is not None]
    values = [metrics[k] for k in names]
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.bar(names, values, color=_BAR_COLOR)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("score")
    ax.set_title(title)
    for i, v in enumerate(values):
        ax.text(i, v + 0.01, f"{v:.3f}", ha="center", fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def importance_bars(ranking: Sequence[tuple[str, float]], path: str | Path) -> None:
    """Horizontal bars, most important voter on top."""
    names = [name for name, _ in ranking][::-1]
    values = [drop for _, drop in ranking][::-1]
    fig, ax = plt.subplots(figsize=(7.0, 0.32 * max(len(names), 4) + 1.2))
    ax.barh(names, values, color=_BAR_COLOR)
    ax.set_xlabel("mean accuracy drop when permuted")
    ax.set_title("voter importance")
    fig.tight_layout()
    _save(fig, path)


def jaccard_heatmap(
    matrix: np.ndarray,
    row_ids: Sequence[str],
    col_ids: Sequence[str],
    matched: Sequence[tuple[int, int]],
    path: str | Path,
) -> None:
    """Cluster-overlap matrix with the chosen matching outlined."""
    fig, ax = plt.subplots(figsize=(1.0 + 0.6 * len(col_ids), 1.0 + 0.6 * len(row_ids)))
    ax.imshow(matrix, cmap="Blues", vmin=0.0, vmax=1.0)
    ax.set_xticks(range(len(col_ids)), col_ids, rotation=45, ha="right", fontsize=8)
    ax.set_yticks(range(len(row_ids)), row_ids, fontsize=8)
    for i in range(matrix.shape[0]):
        for j in range(matrix.shape[1]):
            ax.text(j, i, f"{matrix[i, j]:.2f}", ha="center", va="center", fontsize=7)
    for i, j in matched:
        ax.add_patch(plt.Rectangle((j - 0.5, i - 0.5), 1, 1, fill=False,
                                   edgecolor=_ACCENT, linewidth=2))
    ax.set_xlabel("expected clusters")
    ax.set_ylabel("computed clusters")
    ax.set_title("cluster overlap (matched pairs outlined)")
    fig.tight_layout()
    _save(fig, path)


def experiment_bars(table: Mapping[str, Mapping[str, float | None]], path: str | Path) -> None:
    """Grouped metric bars per experiment configuration."""
    configs = list(table)
    metric_names = [m for m in ("auc", "acc", "prec", "rec", "fmeasure", "gmean")]
    width = 0.8 / max(len(configs), 1)
    fig, ax = plt.subplots(figsize=(8.0, 3.8))
    base = np.arange(len(metric_names))
    for k, config in enumerate(configs):
        values = [table[config].get(m) or 0.0 for m in metric_names]
        ax.bar(base + k * width, values, width, label=config)
    ax.set_xticks(base + width * (len(configs) - 1) / 2, metric_names)
    ax.set_ylim(0.0, 1.05)
    ax.legend(fontsize=7)
    ax.set_title("experiment metrics by configuration")
    fig.tight_layout()
    _save(fig, path)


def trim_curve(steps: Sequence[tuple[int, float]], baseline: float,
               floor: float, path: str | Path) -> None:
    """Cross-validated accuracy as voters are dropped."""
    sizes = [s for s, _ in steps]
    accs = [a for _, a in steps]
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(sizes, accs, marker="o", color=_BAR_COLOR, label="cv accuracy")
    ax.axhline(baseline, linestyle="--", color="gray", label="full-model accuracy")
    ax.axhline(floor, linestyle=":", color=_ACCENT, label="allowed floor")
    ax.set_xlabel("voters kept")
    ax.set_ylabel("accuracy")
    ax.invert_xaxis()
    ax.legend(fontsize=8)
    ax.set_title("voter trimming")
    fig.tight_layout()
    _save(fig, path)
