"""Figure rendering: overlaid potential/density profiles and zone heatmaps.

Output is deterministic: fixed figure geometry, Agg backend, no timestamps in
image metadata, and a pinned SVG hash salt so identical inputs give identical
bytes.
"""

from __future__ import annotations

import sys

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "tdqmc-figures"

import matplotlib.pyplot as plt
import numpy as np

from .csvio import read_map_csv, read_profile_csv

FIGSIZE_PROFILE = (6.4, 4.2)
FIGSIZE_MAP = (5.6, 4.6)
DPI = 150


def _save(fig, out_image: str) -> None:
    metadata = {"Date": None} if out_image.lower().endswith(".svg") else None
    fig.savefig(out_image, dpi=DPI, metadata=metadata, bbox_inches="tight")
    plt.close(fig)


def render_profile(potential_csv: str, density_csv: str | None = None,
                   entropy_csv: str | None = None, out_image: str = "profile.png") -> None:
    """Potential (blue) with optional density (red) and an entropy panel below."""
    x_pot, v_pot = read_profile_csv(potential_csv)
    panels = 2 if entropy_csv else 1
    fig, axes = plt.subplots(panels, 1, figsize=(FIGSIZE_PROFILE[0],
                                                 FIGSIZE_PROFILE[1] * (1.5 if panels == 2 else 1.0)),
                             sharex=True)
    ax_top = axes[0] if panels == 2 else axes
    ax_top.plot(x_pot, v_pot, color="tab:blue", lw=1.6, label="potential")
    ax_top.set_ylabel("potential (a.u.)", color="tab:blue")
    ax_top.tick_params(axis="y", labelcolor="tab:blue")
    if density_csv:
        x_den, den = read_profile_csv(density_csv)
        ax_den = ax_top.twinx()
        ax_den.plot(x_den, den, color="tab:red", lw=1.6, label="density")
        ax_den.set_ylabel("density (a.u.)", color="tab:red")
        ax_den.tick_params(axis="y", labelcolor="tab:red")
        ax_den.set_ylim(bottom=0.0)
    if entropy_csv:
        x_ent, ent = read_profile_csv(entropy_csv)
        ax_ent = axes[1]
        width = (x_ent[1] - x_ent[0]) if len(x_ent) > 1 else 1.0
        finite = np.isfinite(ent)
        ax_ent.bar(x_ent[finite], ent[finite], width=0.9 * width,
                   color="tab:purple", edgecolor="none")
        ax_ent.set_ylabel("local linear entropy")
        ax_ent.set_ylim(bottom=0.0)
        ax_ent.set_xlabel("x (a.u.)")
    else:
        ax_top.set_xlabel("x (a.u.)")
    _save(fig, out_image)


def render_map(map_csv: str, out_image: str, colormap: str = "viridis",
               mask_empty: bool = True) -> None:
    """Zone heatmap (2D maps) or bar profile (1D maps); empty zones masked."""
    values, counts = read_map_csv(map_csv)
    masked = np.ma.masked_invalid(values)
    if mask_empty:
        masked = np.ma.masked_where(counts == 0, masked)
    if masked.mask.all():
        print(f"warning: {map_csv} has no occupied zones; image will be fully masked",
              file=sys.stderr)
    if values.shape[1] == 1:
        fig, ax = plt.subplots(figsize=FIGSIZE_PROFILE)
        zones = np.arange(values.shape[0])
        heights = np.where(masked.mask.ravel(), 0.0, masked.filled(0.0).ravel())
        ax.bar(zones, heights, width=0.9, color="tab:purple", edgecolor="none")
        for z in zones[masked.mask.ravel()]:
            ax.axvspan(z - 0.45, z + 0.45, color="0.9", zorder=0)
        ax.set_xlabel("zone")
        ax.set_ylabel("value")
        ax.set_ylim(bottom=0.0)
        _save(fig, out_image)
        return
    fig, ax = plt.subplots(figsize=FIGSIZE_MAP)
    cmap = plt.get_cmap(colormap).copy()
    cmap.set_bad("0.85")
    im = ax.imshow(masked.T, origin="lower", cmap=cmap, interpolation="nearest",
                   aspect="equal")
    ax.set_xlabel("zone x")
    ax.set_ylabel("zone y")
    fig.colorbar(im, ax=ax, shrink=0.85)
    _save(fig, out_image)
