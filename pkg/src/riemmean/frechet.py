"""Frechet objective, Karcher descent, balance-point (barycenter) checks,
concentration certificate, and one-sided derivatives of squared distance.

For a configuration ``Q = (q_1, ..., q_N)`` the objective is

    f_Q(p) = (1/N) * sum_i dist(p, q_i)**2,

whose negative gradient field is ``2 * Y_Q`` with
``Y_Q(p) = (1/N) * sum_i log_p(q_i)`` (so ``grad f_Q = -2 Y_Q``; the zero
sets coincide, and the factor 2 is asserted by the finite-difference tests).
Critical points of ``f_Q`` away from cut loci are exactly the points whose
tangent lifts of the data average to zero ("short barycenters").
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import minimal_rotation_logs
from .errors import (
    CutLocusError,
    InvalidInputError,
    MaxIterExceededError,
    NoConvergenceError,
    UnsupportedManifoldError,
)
from .manifolds import (
    CUT_TOL,
    DiagPos,
    Euclidean,
    Manifold,
    Point,
    Product,
    Sphere,
    SpecialOrthogonal,
    Tangent,
    _frozen,
    quasi_random_points,
)

DEFAULT_TOL = 1e-10
DEFAULT_STEP = 1.0
DEFAULT_MAX_ITER = 10000
MULTISTART_EXTRA = 20

SHORT = "short"
ALMOST_SHORT = "almost_short"
BOUNDARY_UNCLASSIFIED = "boundary_unclassified"


@dataclass(frozen=True)
class Configuration:
    """Ordered N-tuple of points on one manifold."""

    manifold: Manifold
    points: tuple[Point, ...]

    def __post_init__(self):
        if len(self.points) < 1:
            raise InvalidInputError("a configuration needs at least one point")
        for p in self.points:
            self.manifold._own(p)
        object.__setattr__(self, "points", tuple(self.points))

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def coord_stack(self) -> np.ndarray:
        """Data coordinates stacked along axis 0 (cached)."""
        stack = getattr(self, "_stack", None)
        if stack is None:
            stack = np.stack([p.coords for p in self.points])
            object.__setattr__(self, "_stack", stack)
        return stack


@dataclass(frozen=True)
class MeanResult:
    minimizer: Point
    objective: float
    grad_norm: float
    iterations: int
    multistart_agreement: bool
    afsari_certified: bool
    barycenter_residual: float
    classification: str


@dataclass(frozen=True)
class Certificate:
    certified: bool
    center: Point | None
    radius: float


def objective(Q: Configuration, p: Point) -> float:
    """Mean squared geodesic distance from ``p`` to the configuration."""
    m = Q.manifold
    m._own(p)
    return float(np.mean([m._dist(p.coords, q.coords) ** 2 for q in Q.points]))


def gradient_field(Q: Configuration, p: Point, cut_tol: float = CUT_TOL) -> Tangent:
    """``Y_Q(p)``, the mean of the logs of the data at ``p``.

    Raises `CutLocusError` when some data point is within ``cut_tol`` of the
    cut locus of ``p`` (the objective is not smooth there).
    """
    m = Q.manifold
    m._own(p)
    vecs = [m._log(p.coords, q.coords, cut_tol) for q in Q.points]
    mean = np.mean(vecs, axis=0) if len(vecs) > 1 else vecs[0]
    return Tangent(p, _frozen(mean))


def _descent_state(m: Manifold, Q: Configuration, coords: np.ndarray, cut_tol: float):
    """Logs of all data at ``coords`` plus derived quantities.

    Off cut loci ``dist == |log|``, so one pass yields the local objective,
    the step direction and the gradient norm.  Vector manifolds supply a
    batched log kernel; matrix and product kinds fall back to a loop.
    """
    block = getattr(m, "_log_block", None)
    if block is not None:
        vecs, sq = block(coords, Q.coord_stack, cut_tol)
        f = float(np.mean(sq))
        direction = vecs.mean(axis=0)
    else:
        vec_list = [m._log(coords, q.coords, cut_tol) for q in Q.points]
        sq = [m._inner(coords, v, v) for v in vec_list]
        f = float(np.mean(sq))
        direction = vec_list[0] if len(vec_list) == 1 else np.mean(vec_list, axis=0)
    g = math.sqrt(max(m._inner(coords, direction, direction), 0.0))
    return direction, f, g


def karcher_descent(
    Q: Configuration,
    p0: Point,
    step: float = DEFAULT_STEP,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    cut_tol: float = CUT_TOL,
    certify: bool = True,
    trace: list[float] | None = None,
) -> MeanResult:
    """Gradient descent ``p <- exp(p, step * Y_Q(p))`` with backtracking
    halving whenever the objective fails to decrease.

    Returns once the gradient norm drops below ``tol``.  The objective is
    nonincreasing across accepted steps up to a 1e-14 relative slack (near
    the floating-point floor of the objective, genuine decreases are smaller
    than one ulp; the slack lets the iteration keep contracting as the
    classical fixed-point map instead of stalling).  Raises `CutLocusError`
    when an iterate runs into a cut locus of some data point and
    backtracking cannot recover, and `MaxIterExceededError` when the
    iteration budget runs out.
    """
    m = Q.manifold
    m._own(p0)
    coords = p0.coords
    direction, f, g = _descent_state(m, Q, coords, cut_tol)
    iterations = 0
    if trace is not None:
        trace.append(f)
    while True:
        if g < tol:
            break
        if iterations >= max_iter:
            raise MaxIterExceededError(
                f"no convergence in {max_iter} iterations (grad norm {g:.3e})"
            )
        slack = 1e-14 * max(1.0, abs(f))
        s = step
        accepted = False
        cut_blocked = False
        while s > 1e-17:
            cand = m._exp(coords, s * direction)
            try:
                cand_dir, cand_f, cand_g = _descent_state(m, Q, cand, cut_tol)
            except CutLocusError:
                cut_blocked = True
                s *= 0.5
                continue
            if cand_f <= f + slack:
                coords, direction, f, g = cand, cand_dir, cand_f, cand_g
                iterations += 1
                accepted = True
                if trace is not None:
                    trace.append(f)
                break
            s *= 0.5
        if not accepted:
            if cut_blocked:
                raise CutLocusError("descent step blocked by a cut locus")
            raise MaxIterExceededError(
                f"backtracking stalled at grad norm {g:.3e}"
            )
    minimizer = Point(m.manifold_id, _frozen(coords))
    residual, classification = barycenter_check(Q, minimizer, cut_tol)
    certified = afsari_certificate(Q).certified if certify else False
    return MeanResult(
        minimizer=minimizer,
        objective=objective(Q, minimizer),
        grad_norm=g,
        iterations=iterations,
        multistart_agreement=True,
        afsari_certified=certified,
        barycenter_residual=residual,
        classification=classification,
    )


def _lex_key(p: Point) -> tuple:
    return tuple(p.coords.ravel())


def frechet_mean(
    Q: Configuration,
    tol: float = DEFAULT_TOL,
    step: float = DEFAULT_STEP,
    max_iter: int = DEFAULT_MAX_ITER,
    cut_tol: float = CUT_TOL,
) -> MeanResult:
    """Multistart Karcher descent.

    Seeds are the N data points plus, on compact manifolds, 20 deterministic
    pseudo-random points.  The lowest-objective converged run wins;
    ``multistart_agreement`` is True iff all converged runs landed within
    ``10 * tol`` of one another.  Among distinct minimizers with objectives
    within ``10 * tol`` of the best, the lexicographically smallest
    coordinate vector is reported.
    """
    m = Q.manifold
    seeds: list[Point] = list(Q.points)
    if m.is_compact:
        seeds.extend(quasi_random_points(m, MULTISTART_EXTRA))
    runs: list[MeanResult] = []
    for seed in seeds:
        try:
            runs.append(
                karcher_descent(
                    Q, seed, step=step, tol=tol, max_iter=max_iter,
                    cut_tol=cut_tol, certify=False,
                )
            )
        except (CutLocusError, MaxIterExceededError):
            continue
    if not runs:
        raise NoConvergenceError("all multistart seeds failed")
    best = min(runs, key=lambda r: (r.objective, _lex_key(r.minimizer)))
    agreement = all(
        m.dist(r.minimizer, best.minimizer) <= 10.0 * tol for r in runs
    )
    if agreement:
        chosen = best
    else:
        ties = [r for r in runs if r.objective <= best.objective + 10.0 * tol]
        chosen = min(ties, key=lambda r: _lex_key(r.minimizer))
    residual, classification = barycenter_check(Q, chosen.minimizer, cut_tol)
    return MeanResult(
        minimizer=chosen.minimizer,
        objective=chosen.objective,
        grad_norm=chosen.grad_norm,
        iterations=chosen.iterations,
        multistart_agreement=agreement,
        afsari_certified=afsari_certificate(Q).certified,
        barycenter_residual=residual,
        classification=classification,
    )


def barycenter_check(
    Q: Configuration, p: Point, tol: float = CUT_TOL
) -> tuple[float, str]:
    """Residual ``|(1/N) sum_i log_p(q_i)|`` and a classification.

    ``short`` means every data point is strictly inside the cut-locus margin
    ``tol``.  Data within ``tol`` of a cut locus (but with the log still
    formable) yield ``boundary_unclassified``: telling singular from
    ordinary cut points numerically is ill-posed, so such configurations are
    reported for manual inspection rather than guessed at.  If some log
    cannot be formed at all, the residual does not exist and `CutLocusError`
    is raised -- at a genuine local minimum this cannot happen.
    """
    m = Q.manifold
    m._own(p)
    boundary = False
    vecs = []
    for q in Q.points:
        if m._in_cut_locus(p.coords, q.coords, tol):
            boundary = True
            vecs.append(m._log(p.coords, q.coords, 1e-15))
        else:
            vecs.append(m._log(p.coords, q.coords, tol))
    mean = np.mean(vecs, axis=0) if len(vecs) > 1 else vecs[0]
    residual = math.sqrt(max(m._inner(p.coords, mean, mean), 0.0))
    return residual, (BOUNDARY_UNCLASSIFIED if boundary else SHORT)


def afsari_certificate(Q: Configuration, margin: float = 1e-9) -> Certificate:
    """Try to exhibit a ball of radius < r_cx containing the configuration.

    Candidate centers are the data points themselves plus a subgradient
    one-center refinement (step toward the current farthest point with
    weight 1/(iter+1)).  Any witness ball suffices; optimality is not
    required.  A False result means "not certified", not "non-unique".
    """
    m = Q.manifold
    r_cx = m.constants.r_cx
    dist_block = getattr(m, "_dist_block", None)

    def distances(coords: np.ndarray) -> np.ndarray:
        if dist_block is not None:
            return dist_block(coords, Q.coord_stack)
        return np.array([m._dist(coords, q.coords) for q in Q.points])

    best = min(Q.points, key=lambda c: float(np.max(distances(c.coords))))
    best_radius = float(np.max(distances(best.coords)))
    if best_radius < r_cx - margin:
        return Certificate(certified=True, center=best, radius=best_radius)
    coords = best.coords
    for it in range(1, 201):
        d = distances(coords)
        radius = float(np.max(d))
        if radius < best_radius:
            best_radius = radius
            best = Point(m.manifold_id, _frozen(coords))
            if best_radius < r_cx - margin:
                break
        if radius == 0.0:
            break
        far = Q.points[int(np.argmax(d))]
        try:
            v = m._log(coords, far.coords, CUT_TOL)
        except CutLocusError:
            break
        coords = m._exp(coords, v / (it + 1.0))
    return Certificate(
        certified=best_radius < r_cx - margin, center=best, radius=best_radius
    )


def forward_directional_derivative(
    manifold: Manifold, q: Point, p: Point, v: Tangent, tol: float = CUT_TOL
) -> float:
    """One-sided derivative of ``dist(., q)**2`` at ``p`` along ``exp_p(tv)``
    as ``t`` decreases to 0.

    Equals ``-2 * sup <v, v'>`` over the set of minimal tangent lifts ``v'``
    of ``q`` at ``p``.  Off the cut locus the set is the singleton
    ``log_p(q)``; on the sphere at the antipode it is the whole radius-pi
    sphere, giving the closed form ``-2 pi |v|``; on SO(m) a single angle-pi
    plane yields exactly two minimal lifts.
    """
    if isinstance(manifold, Product):
        raise UnsupportedManifoldError(
            "minimal-lift sets are not implemented for product manifolds"
        )
    manifold._same_base(p, v)
    manifold._own(q)
    if not manifold.in_cut_locus(p, q, tol):
        return -2.0 * manifold.inner(p, v, manifold.log(p, q, tol))
    if isinstance(manifold, Sphere):
        return -2.0 * math.pi * manifold.norm(p, v)
    if isinstance(manifold, SpecialOrthogonal):
        rel = p.coords.T @ q.coords
        best = -math.inf
        for X in minimal_rotation_logs(rel, tol / math.sqrt(manifold.k)):
            lift = p.coords @ X
            best = max(best, manifold._inner(p.coords, v.vec, lift))
        return -2.0 * best
    if isinstance(manifold, (Euclidean, DiagPos)):  # empty cut locus
        return -2.0 * manifold.inner(p, v, manifold.log(p, q, tol))
    raise UnsupportedManifoldError(f"unsupported manifold {manifold.manifold_id!r}")
