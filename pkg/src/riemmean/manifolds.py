"""Concrete complete Riemannian manifolds with exp / log / dist / inner
product / cut-locus predicates and metric constants.

Supported kinds and their coordinate conventions:

* ``Euclidean(n)``       -- vectors in R^n.
* ``Sphere(n)``          -- the unit n-sphere, as unit vectors in R^(n+1).
* ``SpecialOrthogonal(m, k)`` -- SO(m) as m x m matrices, with the scaled
  bi-invariant metric ``k * g_so`` where ``g_so(X, Y) = tr(X.T Y) / 2`` on
  skew matrices.  This scale is pinned by the constants it must reproduce:
  injectivity radius ``sqrt(k) * pi`` and curvature bound ``1 / (4k)``.
* ``DiagPos(m)``         -- positive diagonal matrices, stored as the m
  diagonal entries, with the log-Euclidean (flat) metric
  ``<u, v>_d = sum u_i v_i / d_i**2``, i.e. isometric to R^m via entrywise
  log.  Nonpositive curvature, infinite injectivity radius.
* ``Product(...)``       -- finite products, coordinates concatenated.

Points and tangents are thin immutable wrappers around ndarray coordinates;
a point carries the id string of its owning manifold so mismatched inputs
are caught early.  Every operation is a pure function; manifold descriptors
are immutable after construction.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from .core import INF, MetricConstants, rotation_angles, rotation_exp, rotation_log
from .errors import CutLocusError, InvalidInputError

POINT_TOL = 1e-10
CUT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Point:
    """A manifold point: owning-manifold id plus embedding coordinates."""

    manifold_id: str
    coords: np.ndarray


@dataclass(frozen=True, eq=False)
class Tangent:
    """A tangent vector anchored at a base point, in embedding coordinates."""

    base: Point
    vec: np.ndarray


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


class Manifold:
    """Common interface; concrete kinds fill in the geometry."""

    manifold_id: str
    constants: MetricConstants
    dim: int
    is_compact: bool

    # -- wrapping / validation ------------------------------------------------

    def point(self, coords) -> Point:
        """Validate ``coords`` against the manifold's defining constraints
        (within 1e-10) and wrap them."""
        coords = np.asarray(coords, dtype=float)
        self._check_coords(coords)
        return Point(self.manifold_id, _frozen(coords))

    def tangent(self, base: Point, vec) -> Tangent:
        """Validate tangency of ``vec`` at ``base`` (within 1e-10) and wrap."""
        self._own(base)
        vec = np.asarray(vec, dtype=float)
        if vec.shape != base.coords.shape:
            raise InvalidInputError(
                f"tangent shape {vec.shape} != point shape {base.coords.shape}"
            )
        self._check_tangent(base, vec)
        return Tangent(base, _frozen(vec))

    def zero_tangent(self, base: Point) -> Tangent:
        self._own(base)
        return Tangent(base, _frozen(np.zeros_like(base.coords)))

    def _own(self, p: Point) -> None:
        if p.manifold_id != self.manifold_id:
            raise InvalidInputError(
                f"point belongs to {p.manifold_id!r}, not {self.manifold_id!r}"
            )

    def _same_base(self, p: Point, v: Tangent) -> None:
        self._own(p)
        self._own(v.base)
        if not np.allclose(v.base.coords, p.coords, rtol=0.0, atol=1e-12):
            raise InvalidInputError("tangent vector is based at a different point")

    def _check_coords(self, coords: np.ndarray) -> None:
        raise NotImplementedError

    def _check_tangent(self, base: Point, vec: np.ndarray) -> None:
        raise NotImplementedError

    # -- geometry -------------------------------------------------------------

    def exp(self, p: Point, v: Tangent) -> Point:
        """Geodesic endpoint ``gamma_v(1)`` starting at ``p``."""
        self._same_base(p, v)
        return Point(self.manifold_id, _frozen(self._exp(p.coords, v.vec)))

    def log(self, p: Point, q: Point, tol: float = CUT_TOL) -> Tangent:
        """Minimal tangent ``v`` with ``exp(p, v) == q`` and
        ``norm(v) == dist(p, q)``.  Raises `CutLocusError` when ``q`` is
        within ``tol`` of the cut locus of ``p``."""
        self._own(p)
        self._own(q)
        return Tangent(p, _frozen(self._log(p.coords, q.coords, tol)))

    def dist(self, p: Point, q: Point) -> float:
        """Geodesic distance; defined everywhere, including the cut locus."""
        self._own(p)
        self._own(q)
        return self._dist(p.coords, q.coords)

    def inner(self, p: Point, u: Tangent, v: Tangent) -> float:
        """Riemannian inner product of two tangent vectors at ``p``."""
        self._same_base(p, u)
        self._same_base(p, v)
        return self._inner(p.coords, u.vec, v.vec)

    def norm(self, p: Point, v: Tangent) -> float:
        return math.sqrt(max(self.inner(p, v, v), 0.0))

    def in_cut_locus(self, p: Point, q: Point, tol: float = CUT_TOL) -> bool:
        """True iff ``q`` is within ``tol`` of the cut locus of ``p``."""
        self._own(p)
        self._own(q)
        return self._in_cut_locus(p.coords, q.coords, tol)

    def project(self, p: Point, ambient) -> np.ndarray:
        """Orthogonal projection of an ambient perturbation onto the tangent
        space at ``p`` (coordinates only)."""
        self._own(p)
        return self._project(p.coords, np.asarray(ambient, dtype=float))

    def tangent_basis(self, p: Point) -> list[Tangent]:
        """Orthonormal tangent basis at ``p``: Gram-Schmidt (in the
        Riemannian inner product) on projected ambient basis vectors, in a
        deterministic order."""
        self._own(p)
        basis: list[np.ndarray] = []
        for ambient in self._ambient_basis(p.coords):
            cand = self._project(p.coords, ambient)
            for b in basis:
                cand = cand - self._inner(p.coords, cand, b) * b
            sq = self._inner(p.coords, cand, cand)
            if sq > 1e-20:
                basis.append(cand / math.sqrt(sq))
            if len(basis) == self.dim:
                break
        if len(basis) != self.dim:
            raise InvalidInputError("failed to build a full tangent basis")
        return [Tangent(p, _frozen(b)) for b in basis]

    def random_point(self, rng: np.random.Generator) -> Point:
        return Point(self.manifold_id, _frozen(self._random_coords(rng)))

    # -- kind-specific kernels (coordinates in, coordinates out) --------------

    def _exp(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _log(self, p: np.ndarray, q: np.ndarray, tol: float) -> np.ndarray:
        raise NotImplementedError

    def _dist(self, p: np.ndarray, q: np.ndarray) -> float:
        raise NotImplementedError

    def _inner(self, p: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
        raise NotImplementedError

    def _in_cut_locus(self, p: np.ndarray, q: np.ndarray, tol: float) -> bool:
        raise NotImplementedError

    def _project(self, p: np.ndarray, ambient: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _ambient_basis(self, p: np.ndarray):
        raise NotImplementedError

    def _random_coords(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"{type(self).__name__}({self.manifold_id!r})"


class Euclidean(Manifold):
    """Flat R^n."""

    def __init__(self, n: int):
        if n < 1:
            raise InvalidInputError("Euclidean dimension must be >= 1")
        self.n = n
        self.dim = n
        self.is_compact = False
        self.manifold_id = f"euclidean:{n}"
        self.constants = MetricConstants.from_bounds(INF, 0.0)

    def _check_coords(self, coords):
        if coords.shape != (self.n,):
            raise InvalidInputError(f"expected shape ({self.n},), got {coords.shape}")

    def _check_tangent(self, base, vec):
        pass

    def _exp(self, p, v):
        return p + v

    def _log(self, p, q, tol):
        return q - p

    def _dist(self, p, q):
        return float(np.linalg.norm(q - p))

    def _inner(self, p, u, v):
        return float(np.dot(u, v))

    def _in_cut_locus(self, p, q, tol):
        return False

    def _project(self, p, ambient):
        return ambient

    def _ambient_basis(self, p):
        return np.eye(self.n)

    def _random_coords(self, rng):
        return rng.standard_normal(self.n)

    def _log_block(self, p, stack, tol):
        vecs = stack - p
        return vecs, np.einsum("ij,ij->i", vecs, vecs)

    def _dist_block(self, p, stack):
        return np.linalg.norm(stack - p, axis=1)


class Sphere(Manifold):
    """Unit n-sphere in R^(n+1).

    Closed forms: ``exp_p(v) = cos|v| p + sin|v| v/|v|``; the log of ``q`` at
    ``p`` points along the projection of ``q`` off ``p`` with length
    ``arccos <p, q>``.  The cut locus of ``p`` is the antipode ``-p``.
    """

    def __init__(self, n: int):
        if n < 1:
            raise InvalidInputError("sphere dimension must be >= 1")
        self.n = n
        self.dim = n
        self.is_compact = True
        self.manifold_id = f"sphere:{n}"
        self.constants = MetricConstants.from_bounds(math.pi, 1.0)

    def _check_coords(self, coords):
        if coords.shape != (self.n + 1,):
            raise InvalidInputError(
                f"expected shape ({self.n + 1},), got {coords.shape}"
            )
        if abs(np.linalg.norm(coords) - 1.0) > POINT_TOL:
            raise InvalidInputError("sphere point is not a unit vector")

    def _check_tangent(self, base, vec):
        if abs(np.dot(base.coords, vec)) > POINT_TOL * max(1.0, np.linalg.norm(vec)):
            raise InvalidInputError("vector is not tangent to the sphere")

    def _exp(self, p, v):
        theta = math.sqrt(float(v @ v))
        sinc = 1.0 if theta < 1e-12 else math.sin(theta) / theta
        out = math.cos(theta) * p + sinc * v
        return out / math.sqrt(float(out @ out))

    def _log(self, p, q, tol):
        c = float(np.clip(np.dot(p, q), -1.0, 1.0))
        w = q - c * p
        theta = math.atan2(np.linalg.norm(w), c)
        if theta > math.pi - tol:
            raise CutLocusError("antipodal points: sphere log undefined")
        if theta < 1e-16:
            return np.zeros_like(p)
        return (theta / math.sin(theta)) * w

    def _dist(self, p, q):
        c = float(np.clip(np.dot(p, q), -1.0, 1.0))
        w = q - c * p
        return math.atan2(np.linalg.norm(w), c)

    def _inner(self, p, u, v):
        return float(np.dot(u, v))

    def _in_cut_locus(self, p, q, tol):
        return self._dist(p, q) > math.pi - tol

    def _project(self, p, ambient):
        return ambient - np.dot(p, ambient) * p

    def _ambient_basis(self, p):
        return np.eye(self.n + 1)

    def _random_coords(self, rng):
        v = rng.standard_normal(self.n + 1)
        return v / np.linalg.norm(v)

    def _angles_block(self, p, stack):
        c = stack @ p
        w = stack - c[:, None] * p
        wn = np.sqrt(np.einsum("ij,ij->i", w, w))
        return np.arctan2(wn, c), w

    def _log_block(self, p, stack, tol):
        theta, w = self._angles_block(p, stack)
        if float(theta.max()) > math.pi - tol:
            raise CutLocusError("antipodal points: sphere log undefined")
        # theta/sin(theta) is stable away from pi; at theta ~ 0 the factor is
        # irrelevant because w ~ 0
        ratio = theta / np.maximum(np.sin(theta), 1e-300)
        return ratio[:, None] * w, theta * theta

    def _dist_block(self, p, stack):
        return self._angles_block(p, stack)[0]


class SpecialOrthogonal(Manifold):
    """SO(m) with the scaled bi-invariant metric ``k * g_so``,
    ``g_so(X, Y) = tr(X.T Y) / 2``.

    Geodesics through ``U`` are ``t -> U expm(t U.T V)``; distances are
    ``sqrt(k)`` times the root-sum-square of the principal rotation angles of
    ``U.T Q``.  The cut locus of ``U`` consists of rotations whose relative
    angle reaches pi in some plane.
    """

    def __init__(self, m: int, k: float = 1.0):
        if m < 2:
            raise InvalidInputError("SO(m) needs m >= 2")
        if not (k > 0):
            raise InvalidInputError("metric scale k must be positive")
        self.m = m
        self.k = float(k)
        self.dim = m * (m - 1) // 2
        self.is_compact = True
        self.manifold_id = f"so:{m}:k={self.k!r}"
        sqrt_k = math.sqrt(self.k)
        self.constants = MetricConstants.from_bounds(sqrt_k * math.pi, 0.25 / self.k)

    def _check_coords(self, coords):
        if coords.shape != (self.m, self.m):
            raise InvalidInputError(
                f"expected shape ({self.m}, {self.m}), got {coords.shape}"
            )
        if np.max(np.abs(coords.T @ coords - np.eye(self.m))) > POINT_TOL:
            raise InvalidInputError("matrix is not orthogonal within tolerance")
        if np.linalg.det(coords) < 0.0:
            raise InvalidInputError("matrix has determinant -1, not in SO(m)")

    def _check_tangent(self, base, vec):
        X = base.coords.T @ vec
        if np.max(np.abs(X + X.T)) > POINT_TOL * max(1.0, np.max(np.abs(X))):
            raise InvalidInputError("U.T V is not skew-symmetric")

    def _exp(self, p, v):
        R = p @ rotation_exp(p.T @ v)
        # one Newton orthogonality step; exact no-op on orthogonal input
        return R @ (1.5 * np.eye(self.m) - 0.5 * (R.T @ R))

    def _log(self, p, q, tol):
        return p @ rotation_log(p.T @ q, tol)

    def _dist(self, p, q):
        theta = rotation_angles(p.T @ q)
        return math.sqrt(self.k * 0.5 * float(np.dot(theta, theta)))

    def _inner(self, p, u, v):
        X = p.T @ u
        Y = p.T @ v
        return self.k * 0.5 * float(np.tensordot(X, Y))

    def _in_cut_locus(self, p, q, tol):
        # tol is a distance; convert to an angle via the sqrt(k) scaling
        return float(rotation_angles(p.T @ q)[0]) > math.pi - tol / math.sqrt(self.k)

    def _project(self, p, ambient):
        X = p.T @ ambient
        return p @ (0.5 * (X - X.T))

    def _ambient_basis(self, p):
        m = self.m
        for i in range(m):
            for j in range(m):
                E = np.zeros((m, m))
                E[i, j] = 1.0
                yield E

    def _random_coords(self, rng):
        Q, R = np.linalg.qr(rng.standard_normal((self.m, self.m)))
        Q = Q * np.sign(np.diag(R))
        if np.linalg.det(Q) < 0.0:
            Q[:, -1] = -Q[:, -1]
        return Q


class DiagPos(Manifold):
    """Positive diagonal matrices with the log-Euclidean metric; flat and
    complete (isometric to R^m via entrywise log)."""

    def __init__(self, m: int):
        if m < 1:
            raise InvalidInputError("DiagPos needs m >= 1")
        self.m = m
        self.dim = m
        self.is_compact = False
        self.manifold_id = f"diagpos:{m}"
        self.constants = MetricConstants.from_bounds(INF, 0.0)

    def _check_coords(self, coords):
        if coords.shape != (self.m,):
            raise InvalidInputError(f"expected shape ({self.m},), got {coords.shape}")
        if np.min(coords) <= 0.0:
            raise InvalidInputError("diagonal entries must be strictly positive")

    def _check_tangent(self, base, vec):
        pass

    def _exp(self, p, v):
        return p * np.exp(v / p)

    def _log(self, p, q, tol):
        return p * np.log(q / p)

    def _dist(self, p, q):
        return float(np.linalg.norm(np.log(q) - np.log(p)))

    def _inner(self, p, u, v):
        return float(np.sum(u * v / (p * p)))

    def _in_cut_locus(self, p, q, tol):
        return False

    def _project(self, p, ambient):
        return ambient

    def _ambient_basis(self, p):
        return np.eye(self.m)

    def _random_coords(self, rng):
        return np.exp(rng.standard_normal(self.m))

    def _log_block(self, p, stack, tol):
        diff = np.log(stack) - np.log(p)
        return p * diff, np.einsum("ij,ij->i", diff, diff)

    def _dist_block(self, p, stack):
        return np.linalg.norm(np.log(stack) - np.log(p), axis=1)


class Product(Manifold):
    """Finite product manifold; coordinates are the concatenated (raveled)
    factor coordinates and all operations act factorwise.

    Stored curvature bound: the max of the factor bounds, floored at 0 when
    any factor is at least 2-dimensional (mixed planes are flat) -- a
    conservative upper bound, which is all `rcx_from_constants` needs.
    """

    def __init__(self, factors: list[Manifold]):
        if len(factors) < 2:
            raise InvalidInputError("a product needs at least two factors")
        if any(isinstance(f, Product) for f in factors):
            raise InvalidInputError("nested products are not supported")
        self.factors = list(factors)
        self.dim = sum(f.dim for f in factors)
        self.is_compact = all(f.is_compact for f in factors)
        self.manifold_id = "product(" + ";".join(f.manifold_id for f in factors) + ")"
        self._shapes = [f_example_shape(f) for f in factors]
        self._sizes = [int(np.prod(s)) for s in self._shapes]
        self._offsets = np.concatenate([[0], np.cumsum(self._sizes)])
        r_inj = min(f.constants.r_inj for f in factors)
        deltas = [f.constants.delta_sup for f in factors]
        delta = max(deltas)
        if any(f.dim >= 2 for f in factors):
            delta = max(delta, 0.0)
        self.constants = MetricConstants.from_bounds(r_inj, delta)

    def split(self, flat: np.ndarray) -> list[np.ndarray]:
        return [
            flat[self._offsets[i] : self._offsets[i + 1]].reshape(self._shapes[i])
            for i in range(len(self.factors))
        ]

    def join(self, parts: list[np.ndarray]) -> np.ndarray:
        return np.concatenate([np.asarray(p, dtype=float).ravel() for p in parts])

    def _check_coords(self, coords):
        if coords.shape != (int(self._offsets[-1]),):
            raise InvalidInputError(
                f"expected flat shape ({int(self._offsets[-1])},), got {coords.shape}"
            )
        for f, part in zip(self.factors, self.split(coords)):
            f._check_coords(part)

    def _check_tangent(self, base, vec):
        for f, p_part, v_part in zip(
            self.factors, self.split(base.coords), self.split(vec)
        ):
            f._check_tangent(Point(f.manifold_id, p_part), v_part)

    def _exp(self, p, v):
        return self.join(
            [f._exp(pp, vv) for f, pp, vv in zip(self.factors, self.split(p), self.split(v))]
        )

    def _log(self, p, q, tol):
        return self.join(
            [f._log(pp, qq, tol) for f, pp, qq in zip(self.factors, self.split(p), self.split(q))]
        )

    def _dist(self, p, q):
        return math.sqrt(
            sum(
                f._dist(pp, qq) ** 2
                for f, pp, qq in zip(self.factors, self.split(p), self.split(q))
            )
        )

    def _inner(self, p, u, v):
        return sum(
            f._inner(pp, uu, vv)
            for f, pp, uu, vv in zip(
                self.factors, self.split(p), self.split(u), self.split(v)
            )
        )

    def _in_cut_locus(self, p, q, tol):
        return any(
            f._in_cut_locus(pp, qq, tol)
            for f, pp, qq in zip(self.factors, self.split(p), self.split(q))
        )

    def _project(self, p, ambient):
        return self.join(
            [
                f._project(pp, aa)
                for f, pp, aa in zip(self.factors, self.split(p), self.split(ambient))
            ]
        )

    def tangent_basis(self, p: Point) -> list[Tangent]:
        # factor bases are already orthonormal and mutually orthogonal
        self._own(p)
        parts = self.split(p.coords)
        out = []
        for i, (f, pp) in enumerate(zip(self.factors, parts)):
            for t in f.tangent_basis(Point(f.manifold_id, _frozen(pp))):
                blocks = [np.zeros(s) for s in self._sizes]
                blocks[i] = t.vec.ravel()
                out.append(Tangent(p, _frozen(np.concatenate(blocks))))
        return out

    def _random_coords(self, rng):
        return self.join([f._random_coords(rng) for f in self.factors])


def f_example_shape(f: Manifold) -> tuple[int, ...]:
    if isinstance(f, Euclidean):
        return (f.n,)
    if isinstance(f, Sphere):
        return (f.n + 1,)
    if isinstance(f, SpecialOrthogonal):
        return (f.m, f.m)
    if isinstance(f, DiagPos):
        return (f.m,)
    raise InvalidInputError(f"unsupported product factor {type(f).__name__}")


def parse_manifold(spec: str) -> Manifold:
    """Parse a manifold descriptor.

    Grammar: ``euclidean:<n>``, ``sphere:<n>``, ``so:<m>:k=<k>`` (``:k=`` part
    optional, default 1), ``diagpos:<m>``, ``product(<spec>;<spec>;...)``.
    """
    spec = spec.strip()
    if spec.startswith("product(") and spec.endswith(")"):
        inner = spec[len("product(") : -1]
        parts = [s for s in inner.split(";") if s.strip()]
        if len(parts) < 2:
            raise InvalidInputError(f"product needs >= 2 factors: {spec!r}")
        return Product([parse_manifold(s) for s in parts])
    fields = spec.split(":")
    kind = fields[0]
    try:
        if kind == "euclidean" and len(fields) == 2:
            return Euclidean(int(fields[1]))
        if kind == "sphere" and len(fields) == 2:
            return Sphere(int(fields[1]))
        if kind == "diagpos" and len(fields) == 2:
            return DiagPos(int(fields[1]))
        if kind == "so" and len(fields) in (2, 3):
            k = 1.0
            if len(fields) == 3:
                if not fields[2].startswith("k="):
                    raise InvalidInputError(f"bad SO(m) scale field {fields[2]!r}")
                k = float(fields[2][2:])
            return SpecialOrthogonal(int(fields[1]), k)
    except ValueError as exc:
        raise InvalidInputError(f"bad manifold spec {spec!r}: {exc}") from exc
    raise InvalidInputError(f"unrecognized manifold spec {spec!r}")


def quasi_random_points(manifold: Manifold, count: int) -> list[Point]:
    """Deterministic pseudo-random points for multistart seeding; the stream
    depends only on the manifold id."""
    key = zlib.crc32(manifold.manifold_id.encode())
    rng = np.random.Generator(np.random.Philox(key=[0x5EED0000 + key, 0]))
    return [manifold.random_point(rng) for _ in range(count)]
