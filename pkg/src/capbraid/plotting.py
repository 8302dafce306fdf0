"""Static SVG phase portraits of gradient foliations."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .morsefol import FoliationAtlas, hamiltonian_ambient, area_form  # noqa: E402

_COLOURS = {0: "tab:blue", 1: "tab:green", 2: "tab:red"}


def _planar(atlas: FoliationAtlas, P: np.ndarray) -> np.ndarray:
    """Torus: coordinates reduced into the square.  Sphere: longitude/latitude."""
    P = np.atleast_2d(P)
    if not atlas.model.is_sphere:
        return P % atlas.model.size
    lon = np.arctan2(P[:, 1], P[:, 0])
    lat = np.arcsin(np.clip(P[:, 2] / atlas.model.size, -1, 1))
    return np.stack([lon, lat], axis=-1)


def _draw_path(ax, atlas, path, **kw):
    q = _planar(atlas, path)
    # break the polyline where it wraps around the fundamental domain
    jump = np.linalg.norm(np.diff(q, axis=0), axis=-1)
    limit = 0.5 * (atlas.model.size if not atlas.model.is_sphere else np.pi)
    cuts = np.nonzero(jump > limit)[0] + 1
    for seg in np.split(q, cuts):
        if seg.shape[0] > 1:
            ax.plot(seg[:, 0], seg[:, 1], **kw)


def phase_portrait(atlas: FoliationAtlas, H=None, path: str | Path | None = None, title: str = "",
                   max_dots: int = 600):
    """Leaves, separatrices, singular points and (given H) transversality dots.

    Dots mark the sign of omega(X_H, leaf direction): orange positive, purple
    negative, black zero.
    """
    plt.rcParams["svg.hashsalt"] = "capbraid"
    fig, ax = plt.subplots(figsize=(6, 6 if not atlas.model.is_sphere else 3.5))
    for leaf in atlas.leaves:
        _draw_path(ax, atlas, leaf, color="0.75", lw=0.6)
    for sep in atlas.separatrices:
        _draw_path(ax, atlas, sep.path, color="k", lw=1.2)
    if H is not None:
        pts, vals = [], []
        for leaf in atlas.leaves:
            mid = 0.5 * (leaf[1:] + leaf[:-1])[::8]
            d = (leaf[1:] - leaf[:-1])[::8]
            X = hamiltonian_ambient(atlas.model, H, mid)
            pts.append(mid)
            vals.append(np.sign(area_form(atlas.model, mid, X, d)))
        if pts:
            P, sgn = np.concatenate(pts), np.concatenate(vals)
            keep = np.linspace(0, P.shape[0] - 1, min(max_dots, P.shape[0])).astype(int)
            q = _planar(atlas, P[keep])
            colour = np.where(sgn[keep] > 0, "tab:orange", np.where(sgn[keep] < 0, "tab:purple", "k"))
            ax.scatter(q[:, 0], q[:, 1], c=colour, s=4, zorder=3)
    for c in atlas.singular:
        q = _planar(atlas, c.point)[0]
        ax.plot(q[0], q[1], "o", color=_COLOURS[c.index], mec="k", ms=8, zorder=4, clip_on=False)
    if atlas.model.is_sphere:
        ax.set_xlim(-np.pi, np.pi)
        ax.set_ylim(-np.pi / 2, np.pi / 2)
        ax.set_xlabel("longitude")
        ax.set_ylabel("latitude")
    else:
        L = atlas.model.size
        ax.set_xlim(0, L)
        ax.set_ylim(0, L)
        ax.set_aspect("equal")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    if path is not None:
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        return Path(path)
    return fig
