"""Static matplotlib figures: trade-off curves and metric heatmaps."""

from __future__ import annotations

import io
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from fairpfc.tradeoff import AucMode, Frontier, TradeoffPoint, boundary  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "fairpfc",
    "svg.fonttype": "none",
}

FRONTIER_GID = "frontier-points"
UTOPIA_GID = "utopia"


def _save(fig, fmt: str) -> bytes:
    buf = io.BytesIO()
    metadata = {"Date": None} if fmt == "svg" else {}
    fig.savefig(buf, format=fmt, metadata=metadata, bbox_inches="tight")
    plt.close(fig)
    return buf.getvalue()


def _draw_curve(ax, frontier: Frontier, mode: AucMode, color, label, gid: str | None):
    verts = boundary(frontier, mode)
    ax.plot(verts[:, 0], verts[:, 1], color=color, lw=1.2, label=label)
    perf, fair = frontier.arrays()
    (line,) = ax.plot(perf, fair, ls="none", marker="o", ms=4, color=color)
    if gid:
        line.set_gid(gid)
    ax.fill_between(verts[:, 0], verts[:, 1], color=color, alpha=0.08, lw=0)


def tradeoff_figure(frontiers: Mapping[str, Frontier], mode: AucMode = AucMode.STEP,
                    candidates: Mapping[str, Sequence[TradeoffPoint]] | None = None,
                    fmt: str = "svg", title: str | None = None) -> bytes:
    """Frontier curves per method with the (1, 1) utopia marked."""
    mode = AucMode(mode)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.0, 3.6))
        colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
        single = len(frontiers) == 1
        for i, (name, frontier) in enumerate(frontiers.items()):
            color = colors[i % len(colors)]
            if candidates and name in candidates:
                pts = np.array([(p.performance, p.fairness) for p in candidates[name]])
                ax.scatter(pts[:, 0], pts[:, 1], s=6, color=color, alpha=0.35, lw=0)
            gid = FRONTIER_GID if single else f"{FRONTIER_GID}-{i}"
            _draw_curve(ax, frontier, mode, color, name, gid)
        (u,) = ax.plot([1.0], [1.0], ls="none", marker="*", ms=9, color="black", label="utopia")
        u.set_gid(UTOPIA_GID)
        ax.set_xlim(0, 1.02)
        ax.set_ylim(0, 1.02)
        ax.set_xlabel("performance")
        ax.set_ylabel("fairness")
        ax.set_title(title or f"performance-fairness trade-off ({mode.value})")
        ax.legend(loc="lower left", frameon=False)
        return _save(fig, fmt)


def metric_heatmap(values: np.ndarray, mask: np.ndarray, class_names: Sequence[str],
                   group_names: Sequence[str], title: str = "", fmt: str = "png") -> bytes:
    """Class x group heatmap; undefined cells are left blank and marked NA."""
    data = np.where(mask, values, np.nan)
    with plt.rc_context(STYLE):
        height = max(2.0, 0.3 * len(class_names) + 1.0)
        fig, ax = plt.subplots(figsize=(1.0 + 0.9 * len(group_names), height))
        im = ax.imshow(data, vmin=0, vmax=1, cmap="viridis", aspect="auto")
        ax.set_xticks(range(len(group_names)), group_names, rotation=30, ha="right")
        ax.set_yticks(range(len(class_names)), class_names)
        for c in range(data.shape[0]):
            for g in range(data.shape[1]):
                text = "NA" if not mask[c, g] else f"{values[c, g]:.2f}"
                ax.text(g, c, text, ha="center", va="center", fontsize=7,
                        color="white" if mask[c, g] and values[c, g] < 0.5 else "black")
        fig.colorbar(im, ax=ax, fraction=0.05)
        if title:
            ax.set_title(title)
        return _save(fig, fmt)


def write(path: str | Path, payload: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(payload)
    return path
