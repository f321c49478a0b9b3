"""Radial basis kernels of the form phi(r) = f(c r^2) and monomial bases.

Supported families (``c`` is the shape parameter, ``t = c r^2``):

====== ====================== =====================
family phi(r)                 f(t)
====== ====================== =====================
ga     exp(-c r^2)            exp(-t)
mq     sqrt(1 + c r^2)        sqrt(1 + t)
iq     1 / (1 + c r^2)        1 / (1 + t)
imq    1 / sqrt(1 + c r^2)    (1 + t)^(-1/2)
====== ====================== =====================

Every family has ``f`` twice continuously differentiable on [0, inf), which
is what the stencil operator evaluation relies on: with
``r phi'(r) = 2 c r^2 f'(c r^2)`` and
``r^2 phi''(r) = 2 c r^2 f'(c r^2) + 4 c^2 r^4 f''(c r^2)``,
the Laplacian of a kernel centered at distance ``rhat`` from the evaluation
point reduces to the closed form

    lap = 2 c D f'(c rhat^2) + 4 c^2 rhat^2 f''(c rhat^2)

in D spatial dimensions. Each family implements ``f``, ``f'``, ``f''``
explicitly; a finite-difference oracle in the test suite guards the algebra.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

__all__ = [
    "KERNEL_FAMILIES",
    "KernelSpec",
    "kernel_value",
    "shifted_basis_value",
    "kernel_laplacian_at_center",
    "PolyBasis",
    "poly_basis",
    "poly_values",
    "poly_matrix",
    "poly_laplacian_at_origin",
]

KERNEL_FAMILIES = ("ga", "mq", "iq", "imq")

# family -> (f, f', f'') as functions of t = c r^2
_F_TABLE = {
    "ga": (
        lambda t: np.exp(-t),
        lambda t: -np.exp(-t),
        lambda t: np.exp(-t),
    ),
    "mq": (
        lambda t: np.sqrt(1.0 + t),
        lambda t: 0.5 * (1.0 + t) ** -0.5,
        lambda t: -0.25 * (1.0 + t) ** -1.5,
    ),
    "iq": (
        lambda t: 1.0 / (1.0 + t),
        lambda t: -((1.0 + t) ** -2),
        lambda t: 2.0 * (1.0 + t) ** -3,
    ),
    "imq": (
        lambda t: (1.0 + t) ** -0.5,
        lambda t: -0.5 * (1.0 + t) ** -1.5,
        lambda t: 0.75 * (1.0 + t) ** -2.5,
    ),
}


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family plus its shape parameter ``c > 0`` (units length^-2)."""

    family: str
    shape: float

    def __post_init__(self):
        fam = self.family.lower()
        if fam not in _F_TABLE:
            raise ValueError(f"unknown kernel family {self.family!r}; choose from {KERNEL_FAMILIES}")
        if not self.shape > 0:
            raise ValueError(f"shape parameter must be positive, got {self.shape}")
        object.__setattr__(self, "family", fam)


def kernel_value(spec: KernelSpec, r):
    """Evaluate ``phi(r) = f(c r^2)``. ``r`` may be a scalar or array, all >= 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("kernel radius must be non-negative")
    f = _F_TABLE[spec.family][0]
    out = f(spec.shape * r * r)
    return float(out) if out.ndim == 0 else out


def shifted_basis_value(spec: KernelSpec, x, ghost):
    """Ghost-centered kernel with its center value removed.

    Returns ``phi(||x - ghost||) - phi(||ghost||)``, which vanishes exactly at
    ``x = 0``; this is the basis element that lets a constrained fit pass
    through the center sample by construction.
    """
    x = np.asarray(x, dtype=float)
    ghost = np.asarray(ghost, dtype=float)
    r = np.sqrt(np.sum((x - ghost) ** 2, axis=-1))
    r0 = np.sqrt(np.sum(ghost * ghost, axis=-1))
    f = _F_TABLE[spec.family][0]
    out = f(spec.shape * r * r) - f(spec.shape * r0 * r0)
    return float(out) if np.ndim(out) == 0 else out


def _kernel_laplacian(spec: KernelSpec, radii, dim: int):
    """Vectorized Laplacian-at-center; tolerates radius 0 via the limit 2cD f'(0)."""
    radii = np.asarray(radii, dtype=float)
    c = spec.shape
    _, fp, fpp = _F_TABLE[spec.family]
    t = c * radii * radii
    return 2.0 * c * dim * fp(t) + 4.0 * c * c * radii * radii * fpp(t)


def kernel_laplacian_at_center(spec: KernelSpec, ghost_radius: float, dim: int) -> float:
    """Laplacian at the stencil center of a kernel centered ``ghost_radius`` away.

    Closed form ``2 c D f'(c rhat^2) + 4 c^2 rhat^2 f''(c rhat^2)``; for the
    ga family in D=2 this reduces to ``4 c (c rhat^2 - 1) exp(-c rhat^2)``.
    The shift term of the ghost basis is constant, so this is also the
    Laplacian of the shifted basis element.
    """
    if not ghost_radius > 0:
        raise ValueError("singular ghost at center: ghost_radius must be positive")
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    return float(_kernel_laplacian(spec, ghost_radius, dim))


@dataclass(frozen=True)
class PolyBasis:
    """Monomial basis of total degree <= ``degree`` in ``dim`` variables.

    ``monomials`` is the ordered tuple of exponent multi-indices; the order is
    graded lexicographic (by total degree, then lexicographically descending
    exponents) and deterministic, e.g. D=2, k=2 without constant:
    ``x, y, x^2, xy, y^2``.
    """

    dim: int
    degree: int
    include_constant: bool
    monomials: tuple

    def __len__(self) -> int:
        return len(self.monomials)


def poly_basis(dim: int, degree: int, include_constant: bool) -> PolyBasis:
    if dim < 1 or degree < 0:
        raise ValueError(f"invalid basis parameters dim={dim}, degree={degree}")
    monos = []
    start = 0 if include_constant else 1
    for deg in range(start, degree + 1):
        level = set()
        for combo in combinations_with_replacement(range(dim), deg):
            e = [0] * dim
            for axis in combo:
                e[axis] += 1
            level.add(tuple(e))
        monos.extend(sorted(level, reverse=True))
    return PolyBasis(dim=dim, degree=degree, include_constant=include_constant,
                     monomials=tuple(monos))


def poly_matrix(basis: PolyBasis, X: np.ndarray) -> np.ndarray:
    """Evaluate all basis monomials at rows of ``X``; returns (len(X), len(basis))."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != basis.dim:
        raise ValueError(f"points have dimension {X.shape[1]}, basis expects {basis.dim}")
    out = np.ones((X.shape[0], len(basis.monomials)))
    for j, exps in enumerate(basis.monomials):
        for axis, p in enumerate(exps):
            if p:
                out[:, j] *= X[:, axis] ** p
    return out


def poly_values(basis: PolyBasis, x) -> np.ndarray:
    """Monomial values at a single point, in basis order."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("poly_values expects a single point; use poly_matrix for batches")
    return poly_matrix(basis, x[None, :])[0]


def poly_laplacian_at_origin(basis: PolyBasis) -> np.ndarray:
    """Laplacian of each monomial evaluated at the origin.

    Only the pure squares x_p^2 survive (each contributing 2); every other
    monomial's Laplacian vanishes at 0. For D=2, k=2 without constant this is
    (0, 0, 2, 0, 2).
    """
    out = np.zeros(len(basis.monomials))
    for j, exps in enumerate(basis.monomials):
        if sum(exps) == 2 and max(exps) == 2:
            out[j] = 2.0
    return out
