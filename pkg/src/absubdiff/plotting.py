"""Optional figures for solver output, rendered off-screen with matplotlib.

Only used when a run configuration sets ``outputs.figures``; the data files
written next to them are the primary plot output.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .solver import Field  # noqa: E402

RC = {
    "figure.figsize": (5.0, 3.6),
    "figure.dpi": 120,
    "font.size": 9,
    "axes.linewidth": 0.6,
    "xtick.major.width": 0.6,
    "ytick.major.width": 0.6,
    "legend.frameon": False,
}


def heatmap(field: Field, path: str | Path, title: str = "") -> Path:
    g = field.grid
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        mesh = ax.pcolormesh(g.x, g.t, field.values, shading="nearest", cmap="viridis")
        fig.colorbar(mesh, ax=ax, label="u")
        ax.set_xlabel("x")
        ax.set_ylabel("t")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def final_profile(field: Field, path: str | Path, title: str = "") -> Path:
    g = field.grid
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.plot(g.x, field.values[0], "--", color="0.5", lw=1.0, label="t = 0")
        ax.plot(g.x, field.values[-1], color="C0", lw=1.4, label=f"t = {g.t_end:g}")
        ax.set_xlabel("x")
        ax.set_ylabel("u")
        ax.legend()
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def render(field: Field, prefix: str | Path, title: str = "") -> list[Path]:
    """Write ``<prefix>_heatmap.png`` and ``<prefix>_final.png``."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    return [
        heatmap(field, prefix.with_name(prefix.name + "_heatmap.png"), title),
        final_profile(field, prefix.with_name(prefix.name + "_final.png"), title),
    ]
