"""Finite-difference differential checks on manifolds.

Derivatives are taken in normal coordinates: an orthonormal tangent basis is
built at the base point and the function is sampled along geodesics through
it.  Central differences give O(h^2) accuracy for C^2 functions.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .core import sym_eig
from .manifolds import Manifold, Point, Tangent

DEFAULT_STEP = 1e-5

Objective = Callable[[Point], float]


def fd_gradient(
    manifold: Manifold, f: Objective, p: Point, h: float = DEFAULT_STEP
) -> Tangent:
    """Central-difference Riemannian gradient of ``f`` at ``p``."""
    basis = manifold.tangent_basis(p)
    vec = np.zeros_like(p.coords)
    for e in basis:
        plus = f(manifold.exp(p, Tangent(p, h * e.vec)))
        minus = f(manifold.exp(p, Tangent(p, -h * e.vec)))
        vec = vec + ((plus - minus) / (2.0 * h)) * e.vec
    return Tangent(p, vec)


def fd_hessian(
    manifold: Manifold, f: Objective, p: Point, h: float = DEFAULT_STEP
) -> np.ndarray:
    """Finite-difference Hessian matrix of ``f`` in normal coordinates at
    ``p`` (symmetric, dim x dim)."""
    basis = manifold.tangent_basis(p)
    n = len(basis)
    f0 = f(p)

    def at(vec: np.ndarray) -> float:
        return f(manifold.exp(p, Tangent(p, vec)))

    H = np.zeros((n, n))
    for i in range(n):
        ei = basis[i].vec
        H[i, i] = (at(h * ei) - 2.0 * f0 + at(-h * ei)) / (h * h)
        for j in range(i + 1, n):
            ej = basis[j].vec
            H[i, j] = H[j, i] = (
                at(h * (ei + ej))
                - at(h * (ei - ej))
                - at(h * (ej - ei))
                + at(-h * (ei + ej))
            ) / (4.0 * h * h)
    return H


def fd_hessian_min_abs_eig(
    manifold: Manifold, f: Objective, p: Point, h: float = DEFAULT_STEP
) -> float:
    """Smallest absolute eigenvalue of the finite-difference Hessian of
    ``f`` at ``p`` (a critical point): a numeric nondegeneracy gauge."""
    _, lam = sym_eig(fd_hessian(manifold, f, p, h))
    return float(np.min(np.abs(lam)))
