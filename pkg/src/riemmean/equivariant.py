"""Finite isometric group actions on a covering manifold, quotient
distances, equivariant Frechet means, and even-covering lifts.

A finite group G acting freely and isometrically on a complete cover M~
determines a quotient manifold M = M~/G whose distance is the orbit
distance ``d(p, q) = min_h d~(p_rep, h . q_rep)``.  Minimizing the
orbit-distance objective upstairs ("equivariant Frechet means") is
equivalent to taking Frechet means downstairs: the minimizer set is a full
G-orbit projecting onto the downstairs mean set.  Inside balls of radius
below the quotient injectivity radius ``min(r_inj(M~), beta/2)`` the
covering is even and configurations lift canonically into each sheet.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    CutLocusError,
    InvalidInputError,
    LiftAmbiguousError,
    MaxIterExceededError,
    NoConvergenceError,
    RadiusTooLargeError,
)
from .frechet import Configuration, karcher_descent
from .manifolds import Manifold, Point, Sphere, _frozen

BETA_SAMPLES = 100_000
FIBER_TOL = 1e-9


@dataclass(frozen=True)
class GroupElement:
    index: int
    label: str

    def __repr__(self) -> str:
        return f"GroupElement({self.index}, {self.label!r})"


@dataclass(frozen=True)
class QuotientPoint:
    """A point of the quotient M~/G, held as a representative on the cover.

    Two quotient points are equal iff some group element maps one
    representative to the other (within `FIBER_TOL`); use
    `FiniteAction.same_fiber` to test this.
    """

    representative: Point


@dataclass(frozen=True)
class BetaEstimate:
    """Minimal displacement ``inf dist(p, h . p)`` over nonidentity h."""

    value: float
    exact: bool


@dataclass(frozen=True)
class QuotientConstants:
    r_inj: float
    r_cx: float
    beta: BetaEstimate


@dataclass(frozen=True)
class EfmResult:
    orbit: list[Point]
    downstairs_mean: QuotientPoint
    objective: float
    aligned_lifts: list[Point]
    alignment: list[GroupElement]
    outer_iterations: int


class FiniteAction:
    """A finite group acting isometrically and freely on a cover manifold.

    ``apply_fn`` maps ``(element_index, Point) -> Point``; ``compose_table``
    and ``inverse_table`` encode the group law on element indices, with the
    identity at index 0.  ``displacement_floor`` may supply, per element, an
    exact value of ``inf_p dist(p, h . p)``; when the infimum of the
    variable part is 0 (as for the built-in actions) this makes the group's
    minimal displacement exactly computable.
    """

    def __init__(
        self,
        cover: Manifold,
        labels: Sequence[str],
        apply_fn: Callable[[int, Point], Point],
        compose_table: np.ndarray,
        inverse_table: np.ndarray,
        displacement_floor: Sequence[float] | None = None,
    ):
        if len(labels) < 2:
            raise InvalidInputError("a group action needs at least two elements")
        self.cover = cover
        self.elements = [GroupElement(i, lab) for i, lab in enumerate(labels)]
        self._apply = apply_fn
        self.compose_table = np.asarray(compose_table, dtype=int)
        self.inverse_table = np.asarray(inverse_table, dtype=int)
        n = len(self.elements)
        if self.compose_table.shape != (n, n) or self.inverse_table.shape != (n,):
            raise InvalidInputError("group tables have the wrong shape")
        if not (
            np.array_equal(self.compose_table[0], np.arange(n))
            and np.array_equal(self.compose_table[:, 0], np.arange(n))
        ):
            raise InvalidInputError("identity must sit at index 0")
        for i in range(n):
            if self.compose_table[i, self.inverse_table[i]] != 0:
                raise InvalidInputError("inverse table inconsistent with composition")
        self.displacement_floor = (
            None if displacement_floor is None else [float(x) for x in displacement_floor]
        )

    @property
    def identity(self) -> GroupElement:
        return self.elements[0]

    @property
    def order(self) -> int:
        return len(self.elements)

    def apply(self, h: GroupElement, p: Point) -> Point:
        self.cover._own(p)
        return self._apply(h.index, p)

    def compose(self, h1: GroupElement, h2: GroupElement) -> GroupElement:
        return self.elements[self.compose_table[h1.index, h2.index]]

    def inverse(self, h: GroupElement) -> GroupElement:
        return self.elements[self.inverse_table[h.index]]

    def orbit(self, p: Point) -> list[Point]:
        return [self.apply(h, p) for h in self.elements]

    def same_fiber(self, p: Point, q: Point, tol: float = FIBER_TOL) -> bool:
        return min(self.cover.dist(self.apply(h, p), q) for h in self.elements) <= tol


def beta(
    action: FiniteAction,
    samples: int = BETA_SAMPLES,
    rng: np.random.Generator | None = None,
) -> BetaEstimate:
    """Minimal displacement of the action over all points and nonidentity
    elements.

    Exact when per-element displacement floors are declared; otherwise a
    sampled estimate over ``samples`` random cover points, flagged
    approximate.
    """
    if action.displacement_floor is not None:
        return BetaEstimate(min(action.displacement_floor[1:]), exact=True)
    if rng is None:
        key = zlib.crc32(action.cover.manifold_id.encode())
        rng = np.random.Generator(np.random.Philox(key=[0xBE7A0000 + key, 0]))
    cover = action.cover
    best = math.inf
    for _ in range(samples):
        p = cover.random_point(rng)
        for h in action.elements[1:]:
            best = min(best, cover.dist(p, action.apply(h, p)))
    return BetaEstimate(best, exact=False)


def quotient_dist(action: FiniteAction, a: QuotientPoint, b: QuotientPoint) -> float:
    """Quotient distance: min over the group of cover distances between
    representatives.  Independent of the representatives chosen."""
    cover = action.cover
    return min(
        cover.dist(a.representative, action.apply(h, b.representative))
        for h in action.elements
    )


def d_evt(action: FiniteAction, q: QuotientPoint, p_tilde: Point) -> float:
    """Hybrid distance from the fiber of ``q`` to a cover point.

    Equals ``quotient_dist(q, class of p_tilde)`` because the covering is a
    local isometry and orbits project to points.
    """
    cover = action.cover
    return min(
        cover.dist(action.apply(h, q.representative), p_tilde)
        for h in action.elements
    )


def efm_objective(
    action: FiniteAction, Q: Sequence[QuotientPoint], p_tilde: Point
) -> float:
    """Mean squared orbit distance; G-invariant in ``p_tilde``."""
    return float(np.mean([d_evt(action, q, p_tilde) ** 2 for q in Q]))


def _align(
    action: FiniteAction, Q: Sequence[QuotientPoint], p_tilde: Point
) -> list[GroupElement]:
    """Per-sample nearest fiber element; ties broken by lowest index."""
    orbits = [action.orbit(q.representative) for q in Q]
    idx, _ = _scan_orbits(action.cover, orbits, p_tilde.coords)
    return [action.elements[i] for i in idx]


def _scan_orbits(cover, orbits, coords):
    """For each cached orbit, the index of the nearest member (lowest index
    on ties) and its distance."""
    indices = []
    dists = []
    for orbit in orbits:
        best_i = 0
        best_d = math.inf
        for i, member in enumerate(orbit):
            d = cover._dist(member.coords, coords)
            if d < best_d:
                best_d = d
                best_i = i
        indices.append(best_i)
        dists.append(best_d)
    return indices, dists


def efm_solve(
    action: FiniteAction,
    Q: Sequence[QuotientPoint],
    tol: float = 1e-10,
    max_outer: int = 500,
    inner_tol: float = 1e-11,
    init: Point | None = None,
) -> EfmResult:
    """Minimize the orbit-distance objective by alternating alignment and a
    Karcher-mean step on the cover.

    Convergence is declared when the per-outer-iteration objective decrease
    falls below ``tol`` with the alignment stable for two consecutive
    iterations.  The objective is nonincreasing across outer iterations.
    Returns one minimizer together with its full orbit; the orbit projects
    to a single quotient point, the downstairs mean.
    """
    Q = list(Q)
    if not Q:
        raise InvalidInputError("need at least one quotient point")
    cover = action.cover
    orbits = [action.orbit(q.representative) for q in Q]

    def scan(coords):
        idx, dists = _scan_orbits(cover, orbits, coords)
        return idx, float(np.mean(np.square(dists)))

    if init is None:
        init = min(
            (q.representative for q in Q),
            key=lambda r: scan(r.coords)[1],
        )
    p = init
    _, f_prev = scan(p.coords)
    prev_alignment: list[int] | None = None
    stable = 0
    outer_done = 0
    for outer in range(1, max_outer + 1):
        idx, _ = scan(p.coords)
        stable = stable + 1 if idx == prev_alignment else 1
        prev_alignment = idx
        lifts = [orbits[i][j] for i, j in enumerate(idx)]
        try:
            step = karcher_descent(
                Configuration(cover, tuple(lifts)), p, tol=inner_tol, certify=False
            )
        except (CutLocusError, MaxIterExceededError) as exc:
            raise NoConvergenceError(f"inner Karcher solve failed: {exc}") from exc
        p = step.minimizer
        idx, f = scan(p.coords)
        outer_done = outer
        if f_prev - f < tol and stable >= 2:
            f_prev = f
            break
        f_prev = f
    else:
        raise NoConvergenceError(f"no convergence in {max_outer} outer iterations")
    idx, _ = scan(p.coords)
    alignment = [action.elements[i] for i in idx]
    lifts = [orbits[i][j] for i, j in enumerate(idx)]
    return EfmResult(
        orbit=action.orbit(p),
        downstairs_mean=QuotientPoint(p),
        objective=f_prev,
        aligned_lifts=lifts,
        alignment=alignment,
        outer_iterations=outer_done,
    )


def radius_relations(action: FiniteAction) -> QuotientConstants:
    """Injectivity and convexity-type radii of the quotient:
    ``r_inj(M) = min(r_inj(M~), beta/2)`` and
    ``r_cx(M) = min(r_cx(M~), beta/4)``."""
    b = beta(action)
    cover = action.cover
    return QuotientConstants(
        r_inj=min(cover.constants.r_inj, b.value / 2.0),
        r_cx=min(cover.constants.r_cx, b.value / 4.0),
        beta=b,
    )


def even_cover_lifts(
    action: FiniteAction,
    center: QuotientPoint,
    r: float,
    Q: Sequence[QuotientPoint],
) -> dict[GroupElement, Configuration]:
    """Lift a configuration supported in the downstairs ball of radius ``r``
    around ``center`` into each sheet of the even covering.

    The sheet labeled by the identity is the ball around the given
    representative; sheet ``h`` is its image under ``h``.  The returned
    family satisfies ``h1 . lifts[h2] == lifts[h1 h2]`` by construction.
    """
    rel = radius_relations(action)
    if r >= rel.r_inj:
        raise RadiusTooLargeError(
            f"radius {r} >= quotient injectivity radius {rel.r_inj}"
        )
    cover = action.cover
    base_center = center.representative
    base_lifts: list[Point] = []
    for q in Q:
        hits = []
        for h in action.elements:
            pt = action.apply(h, q.representative)
            if cover.dist(pt, base_center) < r:
                hits.append(pt)
        if not hits:
            raise InvalidInputError(
                "configuration point lies outside the sampling ball"
            )
        if len(hits) > 1:
            raise LiftAmbiguousError(
                "two fiber points inside one covering ball: radius and "
                "displacement data are inconsistent"
            )
        base_lifts.append(hits[0])
    return {
        h: Configuration(cover, tuple(action.apply(h, pt) for pt in base_lifts))
        for h in action.elements
    }


def antipodal_action(sphere: Sphere) -> FiniteAction:
    """The two-element antipodal action on a sphere (quotient: real
    projective space).  Displacement is constantly pi."""

    def apply_fn(index: int, p: Point) -> Point:
        if index == 0:
            return p
        return Point(p.manifold_id, _frozen(-p.coords))

    return FiniteAction(
        cover=sphere,
        labels=["e", "antipode"],
        apply_fn=apply_fn,
        compose_table=np.array([[0, 1], [1, 0]]),
        inverse_table=np.array([0, 1]),
        displacement_floor=[0.0, math.pi],
    )
