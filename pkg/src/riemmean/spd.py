"""Scaling-rotation geometry of SPD matrices.

An SPD matrix ``S`` with distinct eigenvalues ("top stratum") has a finite
set of eigendecompositions ``S = U diag(d) U^T`` with ``U`` in SO(m): the
orbit of any one of them under the group G(m) of even signed permutations
(order ``2**(m-1) * m!``), acting by

    h . (U, d) = (U h^T, h diag(d) h^T).

Distances between eigendecompositions are measured in the product manifold
``SO(m) x Diag+(m)`` with metric ``k * g_so (+) g_diag``:

* ``d_sr(S1, S2)``   -- min over the group of fiber-to-fiber distances;
* ``d_psr(S, pair)`` -- min distance from the fiber of ``S`` to a fixed
  eigendecomposition ("partial" distance).

Minimizers of the mean squared partial distance are computed by reduction
to the equivariant mean machinery on the product cover; by construction
they are determined only up to the group action.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import expm_sym, so_norm_from_identity, sym_eig
from .equivariant import FiniteAction, QuotientPoint, efm_solve
from .errors import DegenerateSpectrumError, InvalidInputError
from .manifolds import DiagPos, Point, Product, SpecialOrthogonal, _frozen

GAP_TOL = 1e-8
ORBIT_MATCH_TOL = 1e-7


@dataclass(frozen=True)
class SignedPermutation:
    """An even signed permutation: matrix ``M e_j = signs[j] * e_perm[j]``
    with determinant +1."""

    perm: tuple[int, ...]
    signs: tuple[int, ...]

    def __post_init__(self):
        m = len(self.perm)
        if sorted(self.perm) != list(range(m)) or len(self.signs) != m:
            raise InvalidInputError("malformed signed permutation")
        if any(s not in (-1, 1) for s in self.signs):
            raise InvalidInputError("signs must be +-1")
        if _perm_sign(self.perm) * int(np.prod(self.signs)) != 1:
            raise InvalidInputError("signed permutation is odd (determinant -1)")

    @property
    def matrix(self) -> np.ndarray:
        m = len(self.perm)
        M = np.zeros((m, m))
        for j, (i, s) in enumerate(zip(self.perm, self.signs)):
            M[i, j] = float(s)
        return M

    @property
    def label(self) -> str:
        return "".join(map(str, self.perm)) + "|" + "".join(
            "+" if s > 0 else "-" for s in self.signs
        )


def _perm_sign(perm: tuple[int, ...]) -> int:
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def group_enumerate(m: int) -> list[SignedPermutation]:
    """All even signed permutations of size m, identity first, in a fixed
    deterministic order (permutations lexicographic, then signs with +1
    preferred)."""
    if not 2 <= m <= 5:
        raise InvalidInputError(f"group enumeration supports 2 <= m <= 5, got {m}")
    out = []
    for perm in itertools.permutations(range(m)):
        for signs in itertools.product((1, -1), repeat=m):
            if _perm_sign(perm) * int(np.prod(signs)) == 1:
                out.append(SignedPermutation(perm, signs))
    return out


@dataclass(frozen=True)
class EigenPair:
    """An eigendecomposition ``(U, d)``: ``U`` in SO(m) and positive
    diagonal entries ``d`` with ``U diag(d) U^T`` the decomposed matrix."""

    U: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "U", _frozen(self.U))
        object.__setattr__(self, "d", _frozen(self.d))

    def spd(self) -> np.ndarray:
        """The decomposed SPD matrix ``U diag(d) U^T``."""
        return (self.U * self.d) @ self.U.T

    def to_point(self, cover: Product) -> Point:
        return cover.point(cover.join([self.U, self.d]))

    @classmethod
    def from_point(cls, cover: Product, p: Point) -> "EigenPair":
        U_part, d_part = cover.split(p.coords)
        return cls(U_part, d_part)


def act(h: SignedPermutation, pair: EigenPair) -> EigenPair:
    """Group action on eigendecompositions; preserves the decomposed matrix
    and is an isometry of the product metric."""
    M = h.matrix
    new_d = np.empty_like(pair.d)
    for j, i in enumerate(h.perm):
        new_d[i] = pair.d[j]
    return EigenPair(pair.U @ M.T, new_d)


def spd_validate(S: np.ndarray, sym_tol: float = 1e-12) -> np.ndarray:
    """Check symmetry and positive-definiteness; returns the array."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got {S.shape}")
    if np.max(np.abs(S - S.T)) > sym_tol:
        raise InvalidInputError("matrix is not symmetric within tolerance")
    if np.min(np.linalg.eigvalsh(S)) <= 0.0:
        raise InvalidInputError("matrix is not positive definite")
    return S


def top_stratum_gap(S: np.ndarray) -> float:
    """Minimum consecutive gap of the sorted spectrum; 0 on repeated
    eigenvalues."""
    S = spd_validate(S)
    lam = np.sort(np.linalg.eigvalsh(S))[::-1]
    return float(np.min(lam[:-1] - lam[1:]))


def eig_canonical(S: np.ndarray, gap_tol: float = GAP_TOL) -> EigenPair:
    """Deterministic eigendecomposition of a top-stratum SPD matrix.

    Eigenvalues sorted descending; each eigenvector's first nonzero entry is
    made positive, then the last column is negated if needed for det +1.
    Near-degenerate spectra (min gap < ``gap_tol``) are refused: their fiber
    is not a finite group orbit.
    """
    S = spd_validate(S)
    U, lam = sym_eig(S)
    if np.min(lam) <= 0.0:
        raise InvalidInputError("matrix is not positive definite")
    if S.shape[0] >= 2 and float(np.min(lam[:-1] - lam[1:])) < gap_tol:
        raise DegenerateSpectrumError(
            f"eigen-gap below {gap_tol}: fiber is not a finite orbit"
        )
    U = U.copy()
    for j in range(U.shape[1]):
        col = U[:, j]
        nonzero = np.nonzero(np.abs(col) > 1e-12)[0]
        if nonzero.size and col[nonzero[0]] < 0.0:
            U[:, j] = -col
    if np.linalg.det(U) < 0.0:
        U[:, -1] = -U[:, -1]
    return EigenPair(U, lam)


def cover_manifold(m: int, k: float = 1.0) -> Product:
    """The eigendecomposition space ``SO(m) x Diag+(m)`` with metric
    ``k * g_so (+) g_diag``."""
    return Product([SpecialOrthogonal(m, k), DiagPos(m)])


def gm_action(m: int, k: float = 1.0) -> FiniteAction:
    """G(m) acting on the eigendecomposition cover.

    The rotation part of each element's displacement is the constant
    ``sqrt(k) * d_so(h, I)`` by bi-invariance, and the diagonal part
    vanishes toward equal-entry diagonals, so per-element displacement
    floors are exact and the group's minimal displacement is
    ``sqrt(k) * beta_gp``.
    """
    elements = group_enumerate(m)
    cover = cover_manifold(m, k)
    matrices = [h.matrix for h in elements]
    keys = {_int_key(M): i for i, M in enumerate(matrices)}
    n = len(elements)
    compose = np.empty((n, n), dtype=int)
    for i in range(n):
        for j in range(n):
            compose[i, j] = keys[_int_key(matrices[i] @ matrices[j])]
    inverse = np.array([keys[_int_key(M.T)] for M in matrices], dtype=int)
    perms = [h.perm for h in elements]

    def apply_fn(index: int, p: Point) -> Point:
        U_part, d_part = cover.split(p.coords)
        new_d = np.empty_like(d_part)
        for j, i in enumerate(perms[index]):
            new_d[i] = d_part[j]
        coords = cover.join([U_part @ matrices[index].T, new_d])
        return Point(cover.manifold_id, _frozen(coords))

    sqrt_k = math.sqrt(k)
    floors = [sqrt_k * so_norm_from_identity(M) for M in matrices]
    return FiniteAction(
        cover=cover,
        labels=[h.label for h in elements],
        apply_fn=apply_fn,
        compose_table=compose,
        inverse_table=inverse,
        displacement_floor=floors,
    )


def _int_key(M: np.ndarray) -> tuple[int, ...]:
    return tuple(int(round(x)) for x in M.ravel())


def d_psr(
    S: np.ndarray, pair: EigenPair, k: float = 1.0, gap_tol: float = GAP_TOL
) -> float:
    """Partial scaling-rotation distance: fiber of ``S`` to the fixed
    eigendecomposition ``pair``."""
    canon = eig_canonical(S, gap_tol)
    cover = cover_manifold(S.shape[0], k)
    target = pair.to_point(cover)
    return min(
        cover.dist(act(h, canon).to_point(cover), target)
        for h in group_enumerate(S.shape[0])
    )


def d_sr(
    S1: np.ndarray, S2: np.ndarray, k: float = 1.0, gap_tol: float = GAP_TOL
) -> float:
    """Scaling-rotation distance between two top-stratum SPD matrices:
    minimal product-metric distance between their eigendecomposition
    fibers.  One-sided group minimization suffices since the action is
    isometric."""
    c1 = eig_canonical(np.asarray(S1, dtype=float), gap_tol)
    c2 = eig_canonical(np.asarray(S2, dtype=float), gap_tol)
    m = c1.U.shape[0]
    cover = cover_manifold(m, k)
    base = c1.to_point(cover)
    return min(
        cover.dist(base, act(h, c2).to_point(cover)) for h in group_enumerate(m)
    )


def psr_objective(
    samples: list[np.ndarray],
    pair: EigenPair,
    k: float = 1.0,
    gap_tol: float = GAP_TOL,
) -> float:
    """Mean squared partial scaling-rotation distance to the samples."""
    return float(np.mean([d_psr(S, pair, k, gap_tol) ** 2 for S in samples]))


@dataclass(frozen=True)
class PsrMeanResult:
    representative: EigenPair
    aligned_lifts: list[EigenPair]
    objective: float
    unique_up_to_G: bool
    outer_iterations: int


def psr_mean(
    samples: list[np.ndarray],
    k: float = 1.0,
    tol: float = 1e-10,
    gap_tol: float = GAP_TOL,
    restarts: int = 5,
    rng: np.random.Generator | None = None,
) -> PsrMeanResult:
    """Partial scaling-rotation mean via the equivariant solver.

    Canonical sample lifts are alternately re-aligned over the group and
    averaged by a Karcher step on the product cover (closed-form
    log-Euclidean averaging on the diagonal factor, iterative on SO(m)).
    ``unique_up_to_G`` is True iff ``restarts`` extra solves from random
    group-translated sample lifts all land on the same group orbit within
    1e-7.
    """
    if not samples:
        raise InvalidInputError("need at least one sample")
    samples = [spd_validate(S) for S in samples]
    m = samples[0].shape[0]
    if any(S.shape[0] != m for S in samples):
        raise InvalidInputError("samples have mixed sizes")
    canons = [eig_canonical(S, gap_tol) for S in samples]
    cover = cover_manifold(m, k)
    action = gm_action(m, k)
    Q = [QuotientPoint(c.to_point(cover)) for c in canons]
    base = efm_solve(action, Q, tol=tol)
    rep_point = base.downstairs_mean.representative
    unique = True
    if restarts > 0:
        if rng is None:
            rng = np.random.Generator(np.random.Philox(key=[0x9512, 0]))
        from .errors import NoConvergenceError

        for _ in range(restarts):
            h = action.elements[int(rng.integers(action.order))]
            j = int(rng.integers(len(Q)))
            init = action.apply(h, Q[j].representative)
            try:
                res = efm_solve(action, Q, tol=tol, init=init)
            except NoConvergenceError:
                unique = False
                continue
            if not action.same_fiber(
                res.downstairs_mean.representative, rep_point, ORBIT_MATCH_TOL
            ):
                unique = False
    return PsrMeanResult(
        representative=EigenPair.from_point(cover, rep_point),
        aligned_lifts=[EigenPair.from_point(cover, p) for p in base.aligned_lifts],
        objective=base.objective,
        unique_up_to_G=unique,
        outer_iterations=base.outer_iterations,
    )


@dataclass(frozen=True)
class PsrConstants:
    beta_gp: float
    r_cx_cover: float
    r_inj_quotient: float
    r_cx_quotient: float


def psr_constants(m: int, k: float = 1.0) -> PsrConstants:
    """Closed-form constants of the eigendecomposition geometry.

    ``beta_gp`` is the minimal unscaled rotation distance from the identity
    over nonidentity group elements (at most pi/2: a single quarter-turn
    plane is always available); the cover's convexity radius is
    ``sqrt(k) pi / 2``; the quotient radii are ``sqrt(k) beta_gp / 2`` and
    ``sqrt(k) beta_gp / 4``.
    """
    elements = group_enumerate(m)
    beta_gp = min(so_norm_from_identity(h.matrix) for h in elements[1:])
    assert beta_gp <= math.pi / 2 + 1e-12
    sqrt_k = math.sqrt(k)
    return PsrConstants(
        beta_gp=beta_gp,
        r_cx_cover=sqrt_k * math.pi / 2.0,
        r_inj_quotient=sqrt_k * beta_gp / 2.0,
        r_cx_quotient=sqrt_k * beta_gp / 4.0,
    )


def sample_spd(rng: np.random.Generator, m: int, sigma: float) -> np.ndarray:
    """Absolutely continuous SPD sampler: exp of a symmetric matrix with
    i.i.d. N(0, sigma^2) entries."""
    A = sigma * rng.standard_normal((m, m))
    A = np.triu(A) + np.triu(A, 1).T
    return expm_sym(A)
