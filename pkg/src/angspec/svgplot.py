"""Deterministic, self-contained SVG line plots of intensity profiles."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

from matplotlib.figure import Figure  # noqa: E402

_RC = {"svg.hashsalt": "angspec", "svg.fonttype": "none", "path.simplify": False}


def write_profile_svg(path, x, y, title: str = "", overlay=None, overlay_label: str = "fit") -> Path:
    """Plot ``y(x)`` (x in meters, drawn in mm) and optionally an overlay curve.

    Output is byte-identical for identical inputs: the SVG id salt is fixed
    and no timestamp is written.
    """
    path = Path(path)
    with matplotlib.rc_context(_RC):
        fig = Figure(figsize=(6.0, 3.6))
        ax = fig.add_subplot()
        ax.plot(x * 1e3, y, lw=1.0, color="black", label="intensity")
        if overlay is not None:
            ax.plot(x * 1e3, overlay, lw=0.8, color="tab:red", ls="--", label=overlay_label)
            ax.legend(loc="upper right", fontsize=8, frameon=False)
        ax.set_xlabel("x (mm)")
        ax.set_ylabel("intensity (arb. units)")
        if title:
            ax.set_title(title, fontsize=10)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    return path
