"""Global differential-matrix assembly and Poisson solves on irregular domains.

The assembled operator is the N x (N + N_b) block matrix [L | L1]: each row
holds one constrained-least-squares Laplacian stencil for an interior point,
with neighbors drawn from the combined interior + boundary cloud (two-sided
stencils near the boundary). Because the stencil acts on centered differences,
the diagonal entry is the exact negative of the off-diagonal row sum, so the
matrix annihilates constants. Dirichlet data on the exterior band is
eliminated: solve ``L u = f - L1 g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator, bicgstab, spilu, splu

from .geometry import Neighborhood, NeighborSearcher, PointCloud
from .ghosts import make_ghosts
from .kernels import KernelSpec, poly_basis
from .stencil import cls_gsp_weights, shape_from_target

__all__ = [
    "StencilConfig",
    "DifferentialMatrix",
    "PoissonProblem",
    "assemble_dm",
    "solve_poisson",
    "normal_extension_values",
]


@dataclass(frozen=True)
class StencilConfig:
    """Per-stencil settings shared by all rows of an assembly."""

    method: str = "cls-gsp"
    n_neighbors: int = 60
    poly_degree: int = 2
    kernel_family: str = "ga"
    cr2_target: float = 1e-2
    ghost_spec: str = "disc:49"
    tol: float = 1e-12

    def __post_init__(self):
        if self.method != "cls-gsp":
            raise ValueError(
                f"assembly supports the cls-gsp method only, got {self.method!r}"
            )


@dataclass(frozen=True)
class DifferentialMatrix:
    """Sparse [L | L1] operator acting on interior + boundary values."""

    matrix: sparse.csr_matrix
    n_interior: int
    n_boundary: int
    diag_policy: str = "diagonal equals negative off-diagonal row sum"
    config: StencilConfig | None = field(default=None, compare=False)

    @property
    def L(self) -> sparse.csr_matrix:
        """Interior-to-interior block (N x N)."""
        return self.matrix[:, : self.n_interior]

    @property
    def L1(self) -> sparse.csr_matrix:
        """Interior-to-boundary block (N x N_b)."""
        return self.matrix[:, self.n_interior:]

    def triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        coo = self.matrix.tocoo()
        return coo.row, coo.col, coo.data

    def export_matrix_market(self, path: str, comment: str = "") -> None:
        from scipy.io import mmwrite

        mmwrite(path, self.matrix.tocoo(), comment=comment)


@dataclass(frozen=True)
class PoissonProblem:
    """Samples of the forcing on the interior and Dirichlet data on the band."""

    interior: PointCloud
    boundary: PointCloud
    f_values: np.ndarray
    g_values: np.ndarray

    def __post_init__(self):
        if len(self.f_values) != len(self.interior):
            raise ValueError("f_values length must match interior point count")
        if len(self.g_values) != len(self.boundary):
            raise ValueError("g_values length must match boundary point count")


def _stencil_row(points: np.ndarray, searcher: NeighborSearcher, i: int,
                 kernel_family: str, cr2_target: float, ghost_spec: str,
                 basis, n_neighbors: int, tol: float):
    try:
        idx = searcher.query(i, n_neighbors)
    except ValueError as exc:
        raise ValueError(f"insufficient neighbors at point {i}: {exc}") from exc
    rel = points[idx] - points[i]
    norms = np.linalg.norm(rel, axis=1)
    nb = Neighborhood(center_index=i, neighbor_indices=idx, rel_coords=rel,
                      mean_radius=float(norms.mean()), max_radius=float(norms.max()))
    ghosts = make_ghosts(nb, ghost_spec)
    kernel = KernelSpec(kernel_family, shape_from_target(cr2_target, nb.mean_radius))
    sw = cls_gsp_weights(nb, ghosts, kernel, basis, tol=tol, with_diagnostics=False)
    return idx, sw.weights


def assemble_dm(cloud: PointCloud, boundary_nodes: PointCloud,
                config: StencilConfig = StencilConfig()) -> DifferentialMatrix:
    """Assemble the Laplacian differential matrix over interior + band points.

    Each interior point gets its ``n_neighbors`` nearest points from the
    combined cloud; off-diagonal entries are the stencil weights and the
    diagonal is their exact negative sum (correctly rounded via fsum).
    """
    if cloud.dim != 2 or boundary_nodes.dim != 2:
        raise ValueError("assembly expects 2-D clouds")
    points = np.vstack([cloud.points, boundary_nodes.points])
    N, Nb = len(cloud), len(boundary_nodes)
    if config.n_neighbors > N + Nb - 1:
        raise ValueError(
            f"insufficient neighbors: need {config.n_neighbors}, cloud has {N + Nb} points"
        )
    searcher = NeighborSearcher(points)
    basis = poly_basis(2, config.poly_degree, include_constant=False)

    nnz_per_row = config.n_neighbors + 1
    rows = np.empty(N * nnz_per_row, dtype=np.intp)
    cols = np.empty(N * nnz_per_row, dtype=np.intp)
    vals = np.empty(N * nnz_per_row)
    for i in range(N):
        idx, w = _stencil_row(points, searcher, i, config.kernel_family,
                              config.cr2_target, config.ghost_spec, basis,
                              config.n_neighbors, config.tol)
        base = i * nnz_per_row
        rows[base:base + nnz_per_row] = i
        cols[base:base + config.n_neighbors] = idx
        cols[base + config.n_neighbors] = i
        vals[base:base + config.n_neighbors] = w
        vals[base + config.n_neighbors] = -math.fsum(w)

    matrix = sparse.csr_matrix((vals, (rows, cols)), shape=(N, N + Nb))
    return DifferentialMatrix(matrix=matrix, n_interior=N, n_boundary=Nb, config=config)


def solve_poisson(dm: DifferentialMatrix, problem: PoissonProblem,
                  solver: str = "lu", rtol: float = 1e-10,
                  maxiter: int = 2000) -> tuple[np.ndarray, float]:
    """Solve ``L u = f - L1 g`` and return ``(u, relative_residual)``.

    Default is a sparse direct LU factorization; ``solver='bicgstab'``
    switches to ILU-preconditioned BiCGStab for larger systems. Raises if the
    factorization fails or the residual exceeds ``rtol``.
    """
    if len(problem.interior) != dm.n_interior or len(problem.boundary) != dm.n_boundary:
        raise ValueError("problem sizes do not match the assembled matrix")
    L = dm.L.tocsc()
    rhs = np.asarray(problem.f_values, dtype=float) - dm.L1 @ np.asarray(problem.g_values, dtype=float)

    if solver == "lu":
        try:
            u = splu(L).solve(rhs)
        except RuntimeError as exc:
            raise RuntimeError(
                f"sparse LU factorization failed (singular interior block? "
                f"N={dm.n_interior}, nnz={L.nnz}): {exc}"
            ) from exc
    elif solver == "bicgstab":
        ilu = spilu(L, drop_tol=1e-5, fill_factor=20)
        M = LinearOperator(L.shape, ilu.solve)
        u, info = bicgstab(L, rhs, rtol=rtol, atol=0.0, maxiter=maxiter, M=M)
        if info != 0:
            res = float(np.linalg.norm(L @ u - rhs) / max(np.linalg.norm(rhs), 1e-300))
            raise RuntimeError(f"bicgstab did not converge (info={info}, residual={res:.3e})")
    else:
        raise ValueError(f"unknown solver {solver!r}")

    denom = float(np.linalg.norm(rhs))
    residual = float(np.linalg.norm(L @ u - rhs)) / (denom if denom > 0 else 1.0)
    if residual > rtol:
        raise RuntimeError(f"solver residual {residual:.3e} exceeds tolerance {rtol:.1e}")
    return u, residual


def normal_extension_values(boundary_nodes: PointCloud,
                            project: Callable[[np.ndarray], np.ndarray],
                            g_on_curve: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Boundary-node values by evaluating g at each node's boundary projection.

    Constant extension along the projection direction, so the extended data
    has zero normal derivative across the boundary curve. When g is defined
    analytically in the exterior, evaluating it directly at the nodes is the
    simpler alternative.
    """
    proj = project(boundary_nodes.points)
    if proj.shape != boundary_nodes.points.shape:
        raise ValueError("projection returned a wrong-shaped array")
    if not np.all(np.isfinite(proj)):
        raise ValueError("projection failed: non-finite projected coordinates")
    return np.asarray(g_on_curve(proj), dtype=float)
