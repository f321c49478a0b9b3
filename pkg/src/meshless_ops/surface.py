"""Point-cloud surface machinery: implicit-surface sampling, tangent frames,
neighbor projection, and Laplace-Beltrami matrix assembly.

Surfaces are handled Lagrangian-style: for each sample point, estimate a
tangent plane, project the 3-D neighbor offsets into it, and apply the 2-D
constrained-least-squares Laplacian stencil there. Before the stencil solve
the projected neighborhood is rotated to a canonical in-plane orientation
derived from its own moments, which makes the resulting row independent of
how the tangent basis was chosen (rotating tangent_u/tangent_v by any angle
leaves the weights unchanged).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import sparse

from .assembly import DifferentialMatrix
from .geometry import Neighborhood, NeighborSearcher, PointCloud
from .ghosts import place_circle
from .kernels import KernelSpec, poly_basis
from .stencil import cls_gsp_weights, shape_from_target

__all__ = [
    "SurfaceFrame",
    "SurfaceCloud",
    "Sphere",
    "gbpm_sample",
    "estimate_frame",
    "exact_sphere_frame",
    "project_neighborhood",
    "canonical_inplane_angle",
    "LBConfig",
    "lb_stencil_row",
    "assemble_lb_dm",
]


@dataclass(frozen=True)
class SurfaceFrame:
    """Right-handed orthonormal frame {tangent_u, tangent_v, normal} at a point."""

    origin: np.ndarray
    normal: np.ndarray
    tangent_u: np.ndarray
    tangent_v: np.ndarray

    def orthonormality_residual(self) -> float:
        B = np.column_stack([self.tangent_u, self.tangent_v, self.normal])
        return float(np.max(np.abs(B.T @ B - np.eye(3))))


@dataclass(frozen=True)
class SurfaceCloud:
    """A 3-D point cloud sampled from a surface, with provenance metadata."""

    cloud: PointCloud
    source: Mapping

    def __len__(self) -> int:
        return len(self.cloud)

    @property
    def points(self) -> np.ndarray:
        return self.cloud.points


@dataclass(frozen=True)
class Sphere:
    """Implicit sphere with a closed-form closest-point map."""

    radius: float = 1.0

    def level_value(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return np.linalg.norm(pts, axis=1) - self.radius

    def closest_point(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r = np.linalg.norm(pts, axis=1)
        if np.any(r == 0):
            raise ValueError("closest point undefined at the sphere center")
        return pts * (self.radius / r)[:, None]

    def normal(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r = np.linalg.norm(pts, axis=1)
        return pts / r[:, None]


def gbpm_sample(surface: Sphere, dx: float, band: float = 1.5,
                origin: tuple = (-2.0, -2.0, -2.0), extent: float = 4.0) -> SurfaceCloud:
    """Grid-based sampling: every lattice node within ``band * dx`` of the
    surface emits its closest surface point.

    The lattice has spacing ``dx``, starts at ``origin``, and spans
    ``extent`` along each axis; output order follows the flattened lattice
    index, so identical parameters give identical clouds. Near-coincident
    projections from adjacent nodes are retained.
    """
    if not dx > 0:
        raise ValueError("dx must be positive")
    n_ax = int(round(extent / dx)) + 1
    axes = [origin[k] + dx * np.arange(n_ax) for k in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    nodes = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    level = surface.level_value(nodes)
    r = np.linalg.norm(nodes, axis=1)
    keep = (np.abs(level) <= band * dx) & (r > 0)
    pts = surface.closest_point(nodes[keep])
    meta = {"kind": "gbpm", "surface": f"sphere:{surface.radius}", "dx": dx,
            "band": band, "origin": tuple(origin), "extent": extent, "count": len(pts)}
    return SurfaceCloud(cloud=PointCloud(pts), source=meta)


def _complete_frame(origin: np.ndarray, normal: np.ndarray) -> SurfaceFrame:
    # seed the first tangent from the axis least aligned with the normal
    seed = np.zeros(3)
    seed[int(np.argmin(np.abs(normal)))] = 1.0
    t1 = seed - (seed @ normal) * normal
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(normal, t1)
    return SurfaceFrame(origin=origin, normal=normal, tangent_u=t1, tangent_v=t2)


def estimate_frame(cloud: SurfaceCloud | PointCloud, index: int, n_frame: int,
                   searcher: NeighborSearcher | None = None) -> SurfaceFrame:
    """Local tangent frame from the covariance of the nearest neighbors.

    The normal is the eigenvector of the smallest covariance eigenvalue
    (sign unconstrained); tangents complete a right-handed orthonormal frame.
    Collinear neighbor sets cannot span a plane and raise "degenerate frame".
    """
    pc = cloud.cloud if isinstance(cloud, SurfaceCloud) else cloud
    if n_frame < 3:
        raise ValueError("frame estimation needs at least 3 neighbors")
    if searcher is None:
        searcher = NeighborSearcher(pc.points)
    idx = searcher.query(index, n_frame)
    X = np.vstack([pc.points[idx], pc.points[index][None, :]])
    X = X - X.mean(axis=0)
    evals, evecs = np.linalg.eigh(X.T @ X)
    if evals[1] <= 1e-12 * max(evals[2], 1e-300):
        raise ValueError(f"degenerate frame at point {index}: neighbors are collinear")
    return _complete_frame(pc.points[index], evecs[:, 0])


def exact_sphere_frame(surface: Sphere, point: np.ndarray) -> SurfaceFrame:
    """Analytic frame for points on a sphere (isolates stencil error from
    frame-estimation error in convergence studies)."""
    point = np.asarray(point, dtype=float)
    normal = surface.normal(point[None, :])[0]
    return _complete_frame(point, normal)


def project_neighborhood(frame: SurfaceFrame, nb: Neighborhood) -> Neighborhood:
    """Project 3-D neighbor offsets onto the tangent plane.

    Returns a 2-D neighborhood with coordinates (offset . tangent_u,
    offset . tangent_v); both radii are recomputed from the projected
    coordinates (projection contracts distances).
    """
    if nb.dim != 3:
        raise ValueError("projection expects a 3-D neighborhood")
    rel2 = np.column_stack([nb.rel_coords @ frame.tangent_u, nb.rel_coords @ frame.tangent_v])
    norms = np.linalg.norm(rel2, axis=1)
    return Neighborhood(center_index=nb.center_index, neighbor_indices=nb.neighbor_indices,
                        rel_coords=rel2, mean_radius=float(norms.mean()),
                        max_radius=float(norms.max()))


def canonical_inplane_angle(rel2: np.ndarray) -> float:
    """Data-derived in-plane orientation, equivariant under rotations.

    Uses the first sufficiently strong complex moment of the neighbor offsets
    (second moment, then first, then fourth). Each candidate transforms as
    exp(i k angle) under an in-plane rotation, so rotating the tangent basis
    shifts the returned angle by the same amount, modulo a residual symmetry
    of pi (second moment) or pi/2 (fourth); both are symmetries of the
    default ghost rings (d divisible by 4), leaving stencil weights unchanged.
    """
    z = rel2[:, 0] + 1j * rel2[:, 1]
    az = np.abs(z)
    for power, scale in ((2, np.sum(az**2)), (1, np.sum(az)), (4, np.sum(az**4))):
        moment = np.sum(z**power)
        if scale > 0 and np.abs(moment) > 1e-8 * scale:
            return float(np.angle(moment) / power)
    return 0.0


def _rotate(rel2: np.ndarray, angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return rel2 @ np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class LBConfig:
    """Settings for Laplace-Beltrami row assembly."""

    n_neighbors: int = 20
    n_frame: int | None = None  # default: same as n_neighbors
    poly_degree: int = 2
    kernel_family: str = "ga"
    cr2_target: float = 1e-2
    d_ghosts: int = 8
    exact_normals: bool = False
    tol: float = 1e-12

    @property
    def frame_neighbors(self) -> int:
        return self.n_frame if self.n_frame is not None else self.n_neighbors


def lb_stencil_row(surface_cloud: SurfaceCloud, index: int, config: LBConfig,
                   searcher: NeighborSearcher | None = None,
                   frame: SurfaceFrame | None = None):
    """One Laplace-Beltrami stencil row: (neighbor_indices, weights).

    ``frame`` overrides the estimated tangent frame; thanks to the canonical
    in-plane orientation the weights do not depend on how the tangent pair is
    rotated within the plane.
    """
    pts = surface_cloud.points
    if searcher is None:
        searcher = NeighborSearcher(pts)
    if frame is None:
        if config.exact_normals:
            src = surface_cloud.source
            if not str(src.get("surface", "")).startswith("sphere"):
                raise ValueError("exact normals are only available for sphere clouds")
            frame = exact_sphere_frame(Sphere(float(str(src["surface"]).split(":")[1])),
                                       pts[index])
        else:
            frame = estimate_frame(surface_cloud, index, config.frame_neighbors,
                                   searcher=searcher)
    try:
        idx = searcher.query(index, config.n_neighbors)
    except ValueError as exc:
        raise ValueError(f"insufficient neighbors at surface point {index}: {exc}") from exc
    rel3 = pts[idx] - pts[index]
    nb3 = Neighborhood(center_index=index, neighbor_indices=idx, rel_coords=rel3,
                       mean_radius=0.0, max_radius=0.0)
    nb2 = project_neighborhood(frame, nb3)
    rel2 = _rotate(nb2.rel_coords, -canonical_inplane_angle(nb2.rel_coords))
    norms = np.linalg.norm(rel2, axis=1)
    nb2 = Neighborhood(center_index=index, neighbor_indices=idx, rel_coords=rel2,
                       mean_radius=float(norms.mean()), max_radius=float(norms.max()))
    ghosts = place_circle(nb2, config.d_ghosts)
    kernel = KernelSpec(config.kernel_family,
                        shape_from_target(config.cr2_target, nb2.mean_radius))
    basis = poly_basis(2, config.poly_degree, include_constant=False)
    sw = cls_gsp_weights(nb2, ghosts, kernel, basis, tol=config.tol,
                         with_diagnostics=False)
    return idx, sw.weights


def assemble_lb_dm(surface_cloud: SurfaceCloud,
                   config: LBConfig = LBConfig()) -> DifferentialMatrix:
    """Assemble the square N x N Laplace-Beltrami matrix of a surface cloud.

    Rows approximate the intrinsic surface Laplacian; the diagonal is the
    exact negative off-diagonal sum, so constants are annihilated and the
    spectrum of the negated matrix approximates the surface eigenvalues.
    """
    import math

    pts = surface_cloud.points
    N = len(pts)
    searcher = NeighborSearcher(pts)
    nnz_per_row = config.n_neighbors + 1
    rows = np.empty(N * nnz_per_row, dtype=np.intp)
    cols = np.empty(N * nnz_per_row, dtype=np.intp)
    vals = np.empty(N * nnz_per_row)
    for i in range(N):
        idx, w = lb_stencil_row(surface_cloud, i, config, searcher=searcher)
        base = i * nnz_per_row
        rows[base:base + nnz_per_row] = i
        cols[base:base + config.n_neighbors] = idx
        cols[base + config.n_neighbors] = i
        vals[base:base + config.n_neighbors] = w
        vals[base + config.n_neighbors] = -math.fsum(w)
    matrix = sparse.csr_matrix((vals, (rows, cols)), shape=(N, N))
    return DifferentialMatrix(matrix=matrix, n_interior=N, n_boundary=0)
