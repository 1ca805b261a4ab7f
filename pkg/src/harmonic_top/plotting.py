"""SVG figures of energy-momentum slices with quantum spectra overlaid."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# slice colours: blue for K = lz - L3, red for M = lz + L3
MODE_COLOR = {"K": "tab:blue", "M": "tab:red"}
MODE_LABEL = {"K": r"$l_z - L_3 = {v:g}$", "M": r"$l_z + L_3 = {v:g}$"}


def _segments(mask):
    """Index ranges of runs with constant ``mask`` value, overlapping by one vertex."""
    if mask.size == 0:
        return
    start = 0
    for i in range(1, mask.size + 1):
        if i == mask.size or mask[i] != mask[start]:
            yield start, min(i + 1, mask.size), bool(mask[start])
            start = i


def plot_slices(slices, levels=(), path=None, xlim=None, ylim=None, title=None):
    """Draw slices and optional quantum levels, then save a self-contained SVG.

    Parameters
    ----------
    slices : list of SliceResult
    levels : iterable of (mode, coordinate, energy)
        Quantum eigenvalues placed at the conserved quantity in physical units.
    """
    plt.rcParams["svg.hashsalt"] = "harmonic-top"
    plt.rcParams["svg.fonttype"] = "path"
    fig, ax = plt.subplots(figsize=(5.5, 5.0))
    for s in slices:
        col = MODE_COLOR[s.mode]
        for c in s.curves:
            if c.kind == "sheet":
                for a, b, ell in _segments(np.asarray(c.elliptic)):
                    ax.plot(c.coord[a:b], c.H[a:b], color=col, lw=1.2, ls="-" if ell else "--")
            else:
                for a, b, stable in _segments(np.asarray(c.elliptic)):
                    ax.plot(c.coord[a:b], c.H[a:b], color="k" if stable else col,
                            lw=0.8 if stable else 2.0, ls="-")
        for p in s.points:
            ax.plot([p.coord], [p.H], marker="o", ms=4, color=col, mfc="white" if p.kind.startswith("case") else col)
    lv = [lvl for lvl in levels]
    for mode in ("K", "M"):
        pts = np.array([(c, e) for md, c, e in lv if md == mode])
        if pts.size:
            ax.plot(pts[:, 0], pts[:, 1], ls="none", marker=".", ms=2.5, color=MODE_COLOR[mode], alpha=0.8)
    if xlim is not None:
        ax.set_xlim(*xlim)
    if ylim is not None:
        ax.set_ylim(*ylim)
    ax.set_xlabel("conjugate momentum")
    ax.set_ylabel("H")
    if title:
        ax.set_title(title, fontsize=9)
    from matplotlib.lines import Line2D

    handles = [Line2D([], [], color=MODE_COLOR[s.mode], lw=1.2, label=MODE_LABEL[s.mode].format(v=s.value))
               for s in slices]
    if slices:
        handles.append(Line2D([], [], color="0.4", lw=1.2, ls="--", label="hyperbolic"))
        ax.legend(handles=handles, loc="upper center", fontsize=8, frameon=False)
    fig.tight_layout()
    if path is not None:
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": "harmonic-top"})
    plt.close(fig)
    return path
