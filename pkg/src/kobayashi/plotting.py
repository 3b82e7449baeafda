"""Log-log figures for normal sweeps."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLES = {
    "lower1": dict(marker="v", color="tab:blue", label="lower, stage 1"),
    "lower2": dict(marker="^", color="tab:green", label="lower, stage 2"),
    "upper_lin": dict(marker="s", color="tab:gray", label="upper, straight disc"),
    "upper_search": dict(marker="o", color="tab:red", label="upper, disc search"),
    "exact": dict(marker="x", color="black", label="exact"),
}
GUIDES = {"stage1": 0.75, "stage2": 0.875, "linear": 1.0}


def plot_sweep(rows, fits, path, title: str = "") -> Path:
    """Estimator values against delta with reference power-law guides."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    anchor = None
    for col, style in STYLES.items():
        d = np.array([r.delta for r in rows if getattr(r, col) is not None])
        v = np.array([getattr(r, col) for r in rows if getattr(r, col) is not None])
        if not len(v):
            continue
        label = style["label"]
        if col in fits:
            label += f" (slope {fits[col].slope:.3f})"
        ax.loglog(d, v, linestyle="-", linewidth=1, markersize=5, marker=style["marker"],
                  color=style["color"], label=label)
        if anchor is None:
            anchor = (d[0], v[0])
    if anchor is not None:
        d = np.array([r.delta for r in rows])
        for name, p in GUIDES.items():
            ax.loglog(d, anchor[1] * (anchor[0] / d) ** p, linestyle=":", linewidth=0.8,
                      color="0.5")
            ax.annotate(f"{name} {p:g}", (d[-1], anchor[1] * (anchor[0] / d[-1]) ** p),
                        fontsize=7, color="0.4")
    ax.set_xlabel("depth delta")
    ax.set_ylabel("metric bound")
    ax.invert_xaxis()
    if title:
        ax.set_title(title)
    ax.legend(fontsize=7)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path
