"""Static SVG figures. Uses the Agg backend and fixed SVG ids/metadata."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {"svg.hashsalt": "oodgraph", "svg.fonttype": "none"}
_META = {"Date": None, "Creator": None}


def _save(fig, path: Path) -> None:
    with matplotlib.rc_context(_RC):
        fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def scatter_embeddings(Z: np.ndarray, labels: np.ndarray, is_ood: np.ndarray, title: str, path: Path) -> None:
    """First two embedding coordinates; ID colored by class, OOD in grey crosses."""
    Z = np.asarray(Z, dtype=float)
    if Z.shape[1] == 1:
        Z = np.column_stack([Z[:, 0], np.zeros(len(Z))])
    fig, ax = plt.subplots(figsize=(4.5, 4))
    for c in sorted(set(labels[~is_ood].tolist())):
        pts = Z[(labels == c) & ~is_ood]
        ax.scatter(pts[:, 0], pts[:, 1], s=10, label=f"ID class {c}")
    ood = Z[is_ood]
    ax.scatter(ood[:, 0], ood[:, 1], s=14, marker="x", c="0.4", label="OOD")
    ax.set_xlabel("z1")
    ax.set_ylabel("z2")
    ax.set_title(title)
    ax.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, Path(path))


def line_plot(x: Sequence[float], series: dict[str, Sequence[float | None]], xlabel: str, title: str, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for name, ys in series.items():
        ys = [np.nan if v is None else v for v in ys]
        ax.plot(x, ys, marker="o", label=name)
    ax.set_xlabel(xlabel)
    ax.set_title(title)
    ax.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, Path(path))
