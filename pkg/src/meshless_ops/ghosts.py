"""Deterministic placement of ghost sample points around a stencil center.

Ghosts are the kernel-center locations, decoupled from the data samples.
Two strategies:

* ``circle``: d points evenly spaced on the circle of radius equal to the
  neighborhood's mean distance (the operator-stencil default, d=8);
* ``disc``: a clamped square lattice filling the disc of radius half the
  neighborhood's max distance (the Poisson-assembly default, 49 points).

Placement depends only on the neighborhood radii and the requested count,
never on neighbor directions, so identical radii give bit-identical ghosts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Neighborhood

__all__ = ["GhostSet", "place_circle", "place_disc", "place_line", "parse_ghost_spec", "make_ghosts"]


@dataclass(frozen=True)
class GhostSet:
    """Center-relative ghost coordinates plus the radius used to place them."""

    ghosts: np.ndarray
    radius_scale: float
    strategy: str

    @property
    def count(self) -> int:
        return len(self.ghosts)

    @property
    def dim(self) -> int:
        return self.ghosts.shape[1]


def place_circle(nb: Neighborhood, d: int) -> GhostSet:
    """d ghosts on the circle of radius mean_radius, at angles 2*pi*m/d, m=1..d."""
    if nb.dim != 2:
        raise ValueError(f"circle ghosts require a 2-D neighborhood, got dim {nb.dim}")
    if d < 3:
        raise ValueError(f"circle strategy needs d >= 3, got {d}")
    if not nb.mean_radius > 0:
        raise ValueError("degenerate neighborhood: all neighbors coincide with the center")
    r = nb.mean_radius
    ang = 2.0 * np.pi * np.arange(1, d + 1) / d
    ghosts = r * np.column_stack([np.cos(ang), np.sin(ang)])
    return GhostSet(ghosts=ghosts, radius_scale=r, strategy=f"circle:{d}")


def place_disc(nb: Neighborhood, count: int) -> GhostSet:
    """``count`` ghosts on a clamped lattice inside the disc of radius max_radius/2.

    An m x m lattice (m = ceil(sqrt(count))) spans the disc's bounding square;
    lattice points outside the disc are radially rescaled onto its boundary.
    The exact center is excluded: for count=1 the single ghost moves to
    (R, 0); otherwise the origin lattice point moves half a lattice cell up
    the y axis, which keeps the set symmetric under x -> -x. Points are
    ordered by (radius, lattice index) and the first ``count`` kept.
    """
    if count < 1:
        raise ValueError(f"ghost count must be >= 1, got {count}")
    if nb.dim == 1:
        return place_line(nb, count)
    if nb.dim != 2:
        raise ValueError(f"disc ghosts require a 1-D or 2-D neighborhood, got dim {nb.dim}")
    if not nb.max_radius > 0:
        raise ValueError("degenerate neighborhood: all neighbors coincide with the center")
    R = 0.5 * nb.max_radius
    m = int(np.ceil(np.sqrt(count)))
    if m == 1:
        return GhostSet(ghosts=np.array([[R, 0.0]]), radius_scale=R, strategy="disc:1")
    ax = np.linspace(-R, R, m)
    gx, gy = np.meshgrid(ax, ax, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    norms = np.linalg.norm(pts, axis=1)
    outside = norms > R
    pts[outside] *= (R / norms[outside])[:, None]
    at_center = np.flatnonzero(norms == 0.0)
    if at_center.size:
        pts[at_center[0]] = [0.0, R / (m - 1)]
    # collinear outside points can collapse onto the same boundary point for
    # large m; nudge repeats inward deterministically
    _, first, inverse, counts = np.unique(
        pts.round(decimals=15), axis=0, return_index=True, return_inverse=True, return_counts=True
    )
    if np.any(counts > 1):
        seen: dict = {}
        for i in range(len(pts)):
            g = inverse[i]
            k = seen.get(g, 0)
            if k:
                pts[i] *= 1.0 - k / (8.0 * m)
            seen[g] = k + 1
    order = np.lexsort((np.arange(len(pts)), np.linalg.norm(pts, axis=1)))
    ghosts = pts[order[:count]]
    return GhostSet(ghosts=ghosts, radius_scale=R, strategy=f"disc:{count}")


def place_line(nb: Neighborhood, count: int) -> GhostSet:
    """1-D analogue of the disc: ``count`` ghosts evenly spread on [-R, R] \\ {0}."""
    if not nb.max_radius > 0:
        raise ValueError("degenerate neighborhood: all neighbors coincide with the center")
    R = 0.5 * nb.max_radius
    if count == 1:
        coords = np.array([R])
    else:
        coords = R * (2.0 * np.arange(1, count + 1) - count - 1) / (count - 1)
        zero = np.flatnonzero(coords == 0.0)
        if zero.size:
            coords[zero[0]] = R / (count - 1)
    return GhostSet(ghosts=coords[:, None], radius_scale=R, strategy=f"disc:{count}")


def parse_ghost_spec(spec: str) -> tuple[str, int]:
    """Parse CLI-style ghost specs like ``circle:8`` or ``disc:49``."""
    try:
        strategy, count_s = spec.split(":")
        count = int(count_s)
    except ValueError as exc:
        raise ValueError(f"bad ghost spec {spec!r}; expected 'circle:<d>' or 'disc:<count>'") from exc
    if strategy not in ("circle", "disc"):
        raise ValueError(f"unknown ghost strategy {strategy!r}")
    return strategy, count


def make_ghosts(nb: Neighborhood, spec: str) -> GhostSet:
    strategy, count = parse_ghost_spec(spec)
    if strategy == "circle":
        return place_circle(nb, count)
    return place_disc(nb, count)
