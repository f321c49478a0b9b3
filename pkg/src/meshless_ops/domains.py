"""Star-shaped 2-D domains and point-cloud generation for PDE experiments.

Domains are described by a radial boundary function r_max(theta); membership
is ``r <= r_max(theta)``. Clouds come in two flavors: seeded rejection
sampling (counter-based generator, reproducible across platforms) and a
uniform grid filtered by membership. A band of exterior nodes with
``r_max < r <= r_max + band`` carries Dirichlet data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import PointCloud, PointTag

__all__ = ["RadialDomain", "disc_domain", "flower_domain", "get_domain", "generate_domain_cloud"]


@dataclass(frozen=True)
class RadialDomain:
    """Domain {(r, theta): r <= rmax(theta)} with a radial boundary projector."""

    name: str
    rmax: Callable[[np.ndarray], np.ndarray]

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        r = np.hypot(pts[:, 0], pts[:, 1])
        th = np.arctan2(pts[:, 1], pts[:, 0])
        return r <= self.rmax(th)

    def in_band(self, pts: np.ndarray, band: float) -> np.ndarray:
        pts = np.atleast_2d(pts)
        r = np.hypot(pts[:, 0], pts[:, 1])
        th = np.arctan2(pts[:, 1], pts[:, 0])
        rm = self.rmax(th)
        return (r > rm) & (r <= rm + band)

    def project_to_boundary(self, pts: np.ndarray) -> np.ndarray:
        """Radially project points onto r = rmax(theta)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r = np.hypot(pts[:, 0], pts[:, 1])
        th = np.arctan2(pts[:, 1], pts[:, 0])
        rm = self.rmax(th)
        out = np.empty_like(pts)
        ok = r > 0
        scale = np.where(ok, rm / np.where(ok, r, 1.0), 0.0)
        out[:, 0] = pts[:, 0] * scale
        out[:, 1] = pts[:, 1] * scale
        out[~ok] = np.column_stack([rm[~ok], np.zeros(np.count_nonzero(~ok))])
        return out

    def area(self, n_quad: int = 20001) -> float:
        th = np.linspace(0.0, 2.0 * np.pi, n_quad)
        return float(np.trapz(0.5 * self.rmax(th) ** 2, th))

    def bounding_radius(self) -> float:
        th = np.linspace(0.0, 2.0 * np.pi, 20001)
        return float(np.max(self.rmax(th)))


def disc_domain(radius: float = 2.0) -> RadialDomain:
    return RadialDomain(name="disc", rmax=lambda th: np.full_like(np.asarray(th, dtype=float), radius))


def flower_domain() -> RadialDomain:
    return RadialDomain(
        name="flower",
        rmax=lambda th: 1.4 + 0.4 * np.sin(5.0 * np.asarray(th)) + 0.4 * np.sin(2.0 * np.asarray(th)),
    )


def get_domain(name: str) -> RadialDomain:
    if name == "disc":
        return disc_domain()
    if name == "flower":
        return flower_domain()
    raise ValueError(f"unknown domain {name!r}; choose 'disc' or 'flower'")


def _rng(seed: int) -> np.random.Generator:
    # Philox: counter-based, identical streams across platforms
    return np.random.Generator(np.random.Philox(seed))


def _rejection_sample(rng: np.random.Generator, n: int, half_extent: float,
                      accept: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    out: list[np.ndarray] = []
    have = 0
    while have < n:
        cand = rng.uniform(-half_extent, half_extent, size=(max(4 * n, 1024), 2))
        good = cand[accept(cand)]
        out.append(good)
        have += len(good)
    return np.concatenate(out)[:n]


def generate_domain_cloud(domain: RadialDomain, n_target: int,
                          sampling: str = "random", band_width: float = 0.5,
                          seed: int = 0, n_boundary: int | None = None
                          ) -> tuple[PointCloud, PointCloud]:
    """Interior samples plus an exterior band layer for one domain.

    random: rejection sampling with exactly ``n_target`` interior points and
    ``n_boundary`` band points (default: scaled by the band/interior area
    ratio). uniform: a square grid with spacing ``h = sqrt(area / n_target)``
    filtered by membership, so counts are approximate but deterministic.
    """
    if sampling not in ("random", "uniform"):
        raise ValueError(f"unknown sampling mode {sampling!r}")
    if n_target < 1:
        raise ValueError("n_target must be positive")
    area = domain.area()
    L = domain.bounding_radius() + band_width
    if n_boundary is None:
        th = np.linspace(0.0, 2.0 * np.pi, 20001)
        rm = domain.rmax(th)
        band_area = float(np.trapz(0.5 * ((rm + band_width) ** 2 - rm**2), th))
        n_boundary = max(1, int(round(n_target * band_area / area)))

    if sampling == "random":
        rng = _rng(seed)
        interior = _rejection_sample(rng, n_target, L, domain.contains)
        boundary = _rejection_sample(rng, n_boundary, L,
                                     lambda p: domain.in_band(p, band_width))
    else:
        h = float(np.sqrt(area / n_target))
        ax = np.arange(-L, L + h / 2.0, h)
        gx, gy = np.meshgrid(ax, ax, indexing="ij")
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        interior = pts[domain.contains(pts)]
        boundary = pts[domain.in_band(pts, band_width)]

    return (
        PointCloud(interior, np.full(len(interior), PointTag.INTERIOR, dtype=np.uint8)),
        PointCloud(boundary, np.full(len(boundary), PointTag.BOUNDARY, dtype=np.uint8)),
    )
