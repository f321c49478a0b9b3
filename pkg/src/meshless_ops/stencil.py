"""Local least-squares stencil weights for the Laplacian on scattered points.

Three weight generators share one machinery:

* :func:`cls_gsp_weights` -- constrained least-squares over ghost-centered
  shifted kernels plus polynomials (no constant). The resulting estimate
  ``lap u(0) ~ sum_i w_i (u(x_i) - u(0))`` annihilates constants exactly and,
  at full rank, reproduces the Laplacian of every basis polynomial.
* :func:`ls_gsp_weights` -- the unconstrained variant (constant in the basis,
  raw kernel values); weights apply to raw samples: ``sum_i w_i u(x_i)``.
* :func:`rbf_fd_weights` -- the classical limit where ghosts coincide with
  the data samples (square saddle system).

Weights come from the pseudoinverse of the transposed fitting system. The
system is equilibrated first (kernel block scaled by its largest entry,
polynomial rows/columns by their column norms): equilibration only rescales
rows and columns, so in exact arithmetic it selects a solution of the same
constraint set, while in floating point it makes the solution invariant
under the stencil rescaling (x_i -> h x_i, c -> c/h^2) to machine precision
and keeps truncation thresholds meaningful across shape-parameter regimes.

Rank is reported twice in the diagnostics: relative to sigma_max (used for
truncation while solving) and against the absolute threshold 1e-10 (the
convention used by the shape-parameter sensitivity experiment). Rank
deficiency is not an error; the pseudoinverse still returns minimum-norm
weights, only the polynomial-reproduction guarantee lapses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Neighborhood
from .ghosts import GhostSet
from .kernels import (
    KernelSpec,
    PolyBasis,
    _F_TABLE,
    _kernel_laplacian,
    poly_laplacian_at_origin,
    poly_matrix,
)

__all__ = [
    "ABS_RANK_EPS",
    "StencilDiagnostics",
    "StencilSystem",
    "StencilWeights",
    "pseudoinverse_solve",
    "build_cls_system",
    "cls_gsp_weights",
    "ls_gsp_weights",
    "rbf_fd_weights",
    "laplacian_estimate",
    "CLSFit",
    "fit_cls_reconstruction",
    "shape_from_target",
]

#: Absolute singular-value threshold for the reported experiment rank.
ABS_RANK_EPS = 1e-10

_OPERATORS = ("laplacian",)


def shape_from_target(cr2_target: float, mean_radius: float) -> float:
    """Per-stencil shape parameter from the policy c * rbar^2 = const."""
    if not mean_radius > 0:
        raise ValueError("degenerate neighborhood: mean radius is zero")
    return cr2_target / (mean_radius * mean_radius)


@dataclass(frozen=True)
class StencilDiagnostics:
    """Singular-value extremes and ranks of the local fitting matrix."""

    sigma_max: float
    sigma_min: float
    rank: int        # singular values > tol * sigma_max
    rank_abs: int    # singular values > ABS_RANK_EPS (absolute)


@dataclass(frozen=True)
class StencilSystem:
    """Assembled blocks of the local fitting problem (before solving).

    ``psi_block`` is n x d (shifted kernels for cls_gsp, raw kernels
    otherwise), ``p_block`` n x l, ``phat_block`` d x l; the right-hand sides
    hold the operator applied to each basis element at the center.
    """

    psi_block: np.ndarray
    p_block: np.ndarray
    phat_block: np.ndarray
    rhs_psi: np.ndarray
    rhs_poly: np.ndarray
    mode: str


@dataclass(frozen=True)
class StencilWeights:
    """Solved stencil: weights over the n neighbors plus diagnostics.

    ``centered`` records whether the weights act on centered differences
    ``u(x_i) - u(0)`` (cls_gsp) or raw samples (ls_gsp, rbf_fd).
    """

    weights: np.ndarray
    aux: np.ndarray
    neighbor_indices: np.ndarray
    shape_used: float
    mode: str
    centered: bool
    full_rank_expected: int
    diagnostics: StencilDiagnostics | None

    @property
    def matrix_rank(self) -> int:
        if self.diagnostics is None:
            raise ValueError("stencil was solved with diagnostics disabled")
        return self.diagnostics.rank

    @property
    def is_full_rank(self) -> bool:
        return self.matrix_rank >= self.full_rank_expected


def pseudoinverse_solve(A: np.ndarray, b: np.ndarray, tol: float = 1e-12):
    """Minimum-norm least-squares solution via truncated SVD.

    Singular values at or below ``tol * sigma_max`` are treated as zero.
    Returns ``(x, rank)`` with ``rank`` the number of retained values.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.size == 0:
        raise ValueError("empty matrix")
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise ValueError("non-finite entries in least-squares system")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    keep = s > tol * s[0]
    rank = int(np.count_nonzero(keep))
    x = Vt[:rank].T @ ((U[:, :rank].T @ b) / s[:rank])
    return x, rank


def _kernel_matrix(spec: KernelSpec, rel: np.ndarray, centers: np.ndarray,
                   shifted: bool) -> np.ndarray:
    """Kernel values phi(||x_i - center_m||), optionally center-shifted."""
    diff = rel[:, None, :] - centers[None, :, :]
    r2 = np.einsum("imk,imk->im", diff, diff)
    f = _F_TABLE[spec.family][0]
    K = f(spec.shape * r2)
    if shifted:
        c2 = np.einsum("mk,mk->m", centers, centers)
        K = K - f(spec.shape * c2)[None, :]
    return K


def _full_matrix(system: StencilSystem) -> np.ndarray:
    n, d = system.psi_block.shape
    l = system.p_block.shape[1]
    G = np.zeros((n + l, d + l))
    G[:n, :d] = system.psi_block
    G[:n, d:] = system.p_block
    G[n:, :d] = system.phat_block.T
    return G


def _solve_weight_system(system: StencilSystem, tol: float,
                         with_diagnostics: bool):
    """Equilibrated pseudoinverse solve of the transposed fitting system."""
    K = system.psi_block
    P = system.p_block
    Phat = system.phat_block
    n, d = K.shape
    l = P.shape[1]

    s_kernel = float(np.max(np.abs(K))) if K.size else 0.0
    if s_kernel == 0.0:
        s_kernel = 1.0
    p_col = np.linalg.norm(P, axis=0)
    p_col[p_col == 0.0] = 1.0
    phat_col = np.linalg.norm(Phat, axis=0) if Phat.size else np.ones(l)
    phat_col[phat_col == 0.0] = 1.0

    M = np.zeros((d + l, n + l))
    M[:d, :n] = K.T / s_kernel
    M[:d, n:] = Phat / phat_col
    M[d:, :n] = (P / p_col).T
    b = np.concatenate([system.rhs_psi / s_kernel, system.rhs_poly / p_col])

    x, _ = pseudoinverse_solve(M, b, tol)
    weights = x[:n]
    aux = x[n:] / phat_col

    diagnostics = None
    if with_diagnostics:
        sv = np.linalg.svd(_full_matrix(system), compute_uv=False)
        diagnostics = StencilDiagnostics(
            sigma_max=float(sv[0]),
            sigma_min=float(sv[-1]),
            rank=int(np.count_nonzero(sv > tol * sv[0])),
            rank_abs=int(np.count_nonzero(sv > ABS_RANK_EPS)),
        )
    return weights, aux, diagnostics


def _check_operator(operator: str) -> None:
    if operator not in _OPERATORS:
        raise ValueError(f"unsupported operator {operator!r}; available: {_OPERATORS}")


def build_cls_system(nb: Neighborhood, ghosts: GhostSet, kernel: KernelSpec,
                     basis: PolyBasis, operator: str = "laplacian") -> StencilSystem:
    """Assemble the constrained-fit blocks (shifted kernels, no constant)."""
    _check_operator(operator)
    if basis.include_constant:
        raise ValueError("cls_gsp basis must exclude the constant monomial")
    if basis.dim != nb.dim or ghosts.dim != nb.dim:
        raise ValueError(
            f"dimension mismatch: neighborhood {nb.dim}, ghosts {ghosts.dim}, basis {basis.dim}"
        )
    if ghosts.count == 0:
        raise ValueError("ghost set is empty")
    gnorm = np.linalg.norm(ghosts.ghosts, axis=1)
    return StencilSystem(
        psi_block=_kernel_matrix(kernel, nb.rel_coords, ghosts.ghosts, shifted=True),
        p_block=poly_matrix(basis, nb.rel_coords),
        phat_block=poly_matrix(basis, ghosts.ghosts),
        rhs_psi=_kernel_laplacian(kernel, gnorm, nb.dim),
        rhs_poly=poly_laplacian_at_origin(basis),
        mode="cls-gsp",
    )


def cls_gsp_weights(nb: Neighborhood, ghosts: GhostSet, kernel: KernelSpec,
                    basis: PolyBasis, operator: str = "laplacian",
                    tol: float = 1e-12, with_diagnostics: bool = True) -> StencilWeights:
    """Constrained least-squares ghost-sample-point weights.

    The estimate is ``lap u(0) ~ sum_i w_i (u(x_i) - u(0))``: applying it to a
    constant gives exactly zero, and at full rank the weights reproduce the
    Laplacian of every polynomial in the basis at the origin.
    """
    system = build_cls_system(nb, ghosts, kernel, basis, operator)
    weights, aux, diag = _solve_weight_system(system, tol, with_diagnostics)
    return StencilWeights(
        weights=weights, aux=aux, neighbor_indices=nb.neighbor_indices,
        shape_used=kernel.shape, mode="cls-gsp", centered=True,
        full_rank_expected=ghosts.count + len(basis), diagnostics=diag,
    )


def ls_gsp_weights(nb: Neighborhood, ghosts: GhostSet, kernel: KernelSpec,
                   basis: PolyBasis, operator: str = "laplacian",
                   tol: float = 1e-12, with_diagnostics: bool = True) -> StencilWeights:
    """Unconstrained ghost-sample-point weights (constant kept in the basis)."""
    _check_operator(operator)
    if not basis.include_constant:
        raise ValueError("ls_gsp basis must include the constant monomial")
    if basis.dim != nb.dim or ghosts.dim != nb.dim:
        raise ValueError("dimension mismatch between neighborhood, ghosts, and basis")
    if ghosts.count == 0:
        raise ValueError("ghost set is empty")
    gnorm = np.linalg.norm(ghosts.ghosts, axis=1)
    system = StencilSystem(
        psi_block=_kernel_matrix(kernel, nb.rel_coords, ghosts.ghosts, shifted=False),
        p_block=poly_matrix(basis, nb.rel_coords),
        phat_block=poly_matrix(basis, ghosts.ghosts),
        rhs_psi=_kernel_laplacian(kernel, gnorm, nb.dim),
        rhs_poly=poly_laplacian_at_origin(basis),
        mode="ls-gsp",
    )
    weights, aux, diag = _solve_weight_system(system, tol, with_diagnostics)
    return StencilWeights(
        weights=weights, aux=aux, neighbor_indices=nb.neighbor_indices,
        shape_used=kernel.shape, mode="ls-gsp", centered=False,
        full_rank_expected=ghosts.count + len(basis), diagnostics=diag,
    )


def rbf_fd_weights(nb: Neighborhood, kernel: KernelSpec, basis: PolyBasis,
                   operator: str = "laplacian", tol: float = 1e-12,
                   with_diagnostics: bool = True) -> StencilWeights:
    """Classical kernel finite-difference weights (kernels centered at the data).

    The ghost set equals the neighbor set, giving the square saddle system;
    duplicate samples only lower the reported rank, the pseudoinverse still
    returns weights.
    """
    _check_operator(operator)
    if not basis.include_constant:
        raise ValueError("rbf_fd basis must include the constant monomial")
    if basis.dim != nb.dim:
        raise ValueError("dimension mismatch between neighborhood and basis")
    radii = np.linalg.norm(nb.rel_coords, axis=1)
    system = StencilSystem(
        psi_block=_kernel_matrix(kernel, nb.rel_coords, nb.rel_coords, shifted=False),
        p_block=poly_matrix(basis, nb.rel_coords),
        phat_block=poly_matrix(basis, nb.rel_coords),
        rhs_psi=_kernel_laplacian(kernel, radii, nb.dim),
        rhs_poly=poly_laplacian_at_origin(basis),
        mode="rbf-fd",
    )
    weights, aux, diag = _solve_weight_system(system, tol, with_diagnostics)
    return StencilWeights(
        weights=weights, aux=aux, neighbor_indices=nb.neighbor_indices,
        shape_used=kernel.shape, mode="rbf-fd", centered=False,
        full_rank_expected=nb.n + len(basis), diagnostics=diag,
    )


def laplacian_estimate(sw: StencilWeights, u_neighbors: np.ndarray,
                       u_center: float | None = None) -> float:
    """Apply stencil weights to sampled values.

    Centered stencils need the center sample and use differences, so any
    constant field maps to exactly zero.
    """
    u_neighbors = np.asarray(u_neighbors, dtype=float)
    if sw.centered:
        if u_center is None:
            raise ValueError("centered stencil requires the center sample value")
        return float(sw.weights @ (u_neighbors - u_center))
    return float(sw.weights @ u_neighbors)


@dataclass(frozen=True)
class CLSFit:
    """Constrained local reconstruction: center value plus ghost kernels plus polynomials.

    ``evaluate(0)`` returns the center sample exactly (every basis element
    vanishes at the origin by construction).
    """

    kernel: KernelSpec
    basis: PolyBasis
    ghosts: GhostSet
    u_center: float
    lam: np.ndarray
    mu: np.ndarray

    def evaluate(self, x) -> np.ndarray:
        X = np.atleast_2d(np.asarray(x, dtype=float))
        if X.shape[1] != self.ghosts.dim:
            X = X.reshape(-1, self.ghosts.dim)
        diff = X[:, None, :] - self.ghosts.ghosts[None, :, :]
        r2 = np.einsum("imk,imk->im", diff, diff)
        g2 = np.einsum("mk,mk->m", self.ghosts.ghosts, self.ghosts.ghosts)
        f = _F_TABLE[self.kernel.family][0]
        psi = f(self.kernel.shape * r2) - f(self.kernel.shape * g2)[None, :]
        vals = self.u_center + psi @ self.lam
        if len(self.basis):
            vals = vals + poly_matrix(self.basis, X) @ self.mu
        return vals if np.ndim(x) else float(vals[0])


def fit_cls_reconstruction(nb: Neighborhood, ghosts: GhostSet, kernel: KernelSpec,
                           basis: PolyBasis, u_neighbors: np.ndarray, u_center: float,
                           tol: float = 1e-12) -> CLSFit:
    """Fit the constrained reconstruction through the center sample.

    Solves the primal least-squares problem: match the centered samples in the
    shifted-kernel + polynomial space, subject to the ghost-side moment
    conditions that zero out the polynomial content of the kernel coefficients.
    """
    system = build_cls_system(nb, ghosts, kernel, basis)
    n, d = system.psi_block.shape
    l = system.p_block.shape[1]
    G = _full_matrix(system)
    rhs = np.concatenate([np.asarray(u_neighbors, dtype=float) - u_center, np.zeros(l)])
    coeffs, _ = pseudoinverse_solve(G, rhs, tol)
    return CLSFit(kernel=kernel, basis=basis, ghosts=ghosts, u_center=float(u_center),
                  lam=coeffs[:d], mu=coeffs[d:])
