"""
Elias Bound Service

Assembles the rate-distance bounds from theta certificates:

- finite form: any code of length n with M codewords has
  max <psi_m, psi_m'> >= ((M e^{-n theta(rho)} - 1) / (M - 1))^rho
- constant composition: if R > I(P, V) + theta(rho, P, V) for a stationary V (PV = P),
  the normalized minimum distance is at most rho * theta(rho, P, V)
- V = P rows (product type) gives the threshold theta(rho, P) with distance
  rho * theta(rho, P)

V-search works on the joint distribution J(x, x') = P(x) V(x'|x), whose two marginals
are both P, so stationarity holds by construction: candidates come from the mixture
path (1 - gamma) I + gamma 1 P^T and are refined by a bounded number of 2x2 moves
inside the transportation polytope.
"""

import csv
import io
import logging
import math
from collections.abc import Callable, Sequence
from pathlib import Path

import numpy as np

from elias_theta.config import get_settings
from elias_theta.exceptions import PreconditionError
from elias_theta.models import (
    BoundPoint,
    Channel,
    Composition,
    ConditionalType,
    CurvePoint,
    DistanceBoundCurve,
    GramMatrix,
)
from elias_theta.services.channel_model import (
    channel_gram,
    mutual_information,
    stationarity_residual,
)
from elias_theta.services.theta_optimizer import OptimizerOptions, ThetaOptimizer

logger = logging.getLogger(__name__)

DEFAULT_RHO_GRID = (1.0, 2.0, 5.0, 10.0, 1e2, 1e3, 1e4)
CSV_HEADER = ("R_nats", "d_bound_nats", "rho", "V_flat", "theta", "mutual_info")

GAMMA_SCAN = (0.0, 0.02, 0.05, 0.1, 0.2, 0.35, 0.5, 0.7, 0.85, 1.0)
BISECTION_STEPS = 16
REFINE_STEPS = (0.25, 0.05, 0.01)


def finite_plotkin_rhs(M: int, n: int, theta_value: float, rho: float) -> float:
    """
    Lower bound ((M e^{-n theta} - 1) / (M - 1))^rho on the largest pairwise inner product
    of any M-codeword length-n code; 0 when M e^{-n theta} <= 1 (vacuous).
    """
    if M < 2 or n < 1:
        raise PreconditionError(f"Need M >= 2 and n >= 1, got M={M}, n={n}", field="M")
    if theta_value < 0 or rho < 1:
        raise PreconditionError("Need theta_value >= 0 and rho >= 1", field="theta_value")
    scaled = M * math.exp(-n * theta_value)
    if scaled <= 1.0:
        return 0.0
    return min(((scaled - 1.0) / (M - 1)) ** rho, 1.0)


def finite_plotkin_rhs_weak(M: int, n: int, theta_value: float, rho: float) -> float:
    """Weaker form (e^{-n theta} - 1/M)^rho, never above finite_plotkin_rhs."""
    if M < 2 or n < 1:
        raise PreconditionError(f"Need M >= 2 and n >= 1, got M={M}, n={n}", field="M")
    base = math.exp(-n * theta_value) - 1.0 / M
    return base**rho if base > 0 else 0.0


def blahut_limit(B: GramMatrix, Q: Composition) -> float:
    """
    -sum Q(x1) Q(x2) ln B[x1][x2]: the large-rho limit of rho * theta(rho, Q) for
    nonnegative-definite channels; +inf when an orthogonal pair lies in the support.
    """
    if Q.size != B.size:
        raise PreconditionError(f"Q has {Q.size} entries, expected {B.size}", field="Q")
    support = Q.support
    block = B.B[np.ix_(support, support)]
    if np.any(block == 0):
        return math.inf
    weights = np.outer(Q.P[support], Q.P[support])
    return abs(float(-np.sum(weights * np.log(block))))


class EliasBoundService:
    """
    Bound points, V-search and envelopes for one channel.

    Weighted subproblems are memoized by (rho, V row) across calls, so the V-search
    and curve sweeps reuse every certificate they have already paid for. The search
    runs its subproblems with SEARCH_RESTARTS random starts and keeps its own memo.

    Example:
        service = EliasBoundService(channel)
        point = service.bound_point_marton(rho=10.0, P=Composition.uniform(2))
    """

    def __init__(self, channel: Channel, options: OptimizerOptions | None = None):
        self.channel = channel
        self.B = channel_gram(channel)
        self.options = options or OptimizerOptions()
        self.optimizer = ThetaOptimizer(self.options)
        self.search_optimizer = ThetaOptimizer(
            self.options.model_copy(
                update={"restarts": min(self.options.restarts, get_settings().SEARCH_RESTARTS)}
            )
        )
        self._cache: dict = {}
        self._search_cache: dict = {}

    def bound_point(self, rho: float, P: Composition, V: ConditionalType) -> BoundPoint:
        """
        (I(P, V) + theta(rho, P, V), rho * theta(rho, P, V)) with per-input certificates.

        Raises:
            PreconditionError: If V is not stationary for P, or rho < 1
        """
        return self._bound_point(rho, P, V, self.optimizer, self._cache)

    def _bound_point(
        self,
        rho: float,
        P: Composition,
        V: ConditionalType,
        optimizer: ThetaOptimizer,
        cache: dict,
        warm: BoundPoint | None = None,
    ) -> BoundPoint:
        if rho < 1:
            raise PreconditionError(f"rho must be >= 1, got {rho}", field="rho")
        if P.size != self.B.size or V.size != self.B.size:
            raise PreconditionError("P and V must be over the channel input alphabet", field="V")
        residual = stationarity_residual(P, V)
        if residual > get_settings().STATIONARITY_TOL:
            raise PreconditionError(
                f"V is not stationary for P: max |PV - P| = {residual:.3g}", field="V"
            )
        theta_value, certificates = optimizer.theta_PV(
            self.B, rho, P, V, cache=cache, warm_starts=warm.certificates if warm is not None else None
        )
        mutual_info = mutual_information(P, V)
        if P.is_point_mass:
            logger.info("Point-mass composition: rate is 0 and the bound is vacuous")
        return BoundPoint(
            rho=rho,
            P=P,
            V=V,
            theta_PV_value=theta_value,
            mutual_info=mutual_info,
            rate_threshold=mutual_info + theta_value,
            distance_bound=rho * theta_value,
            certificates=certificates,
            degenerate=P.is_point_mass,
        )

    def bound_point_marton(self, rho: float, P: Composition) -> BoundPoint:
        """The V(x'|x) = P(x') specialization: threshold theta(rho, P), distance rho * theta(rho, P)."""
        return self.bound_point(rho, P, ConditionalType.product(P))

    def search_V(self, rho: float, P: Composition, R: float) -> BoundPoint | None:
        """
        Smallest distance bound over stationary V with rate threshold below R.

        Walks the mixture path V = (1 - gamma) I + gamma 1 P^T from the product type
        (gamma = 1, solved with full restarts) down to the identity, each subproblem
        warm-started from its neighbour. Every change of admissibility between adjacent
        path points is bisected to the rate boundary, keeping the admissible endpoint.
        The best point is then refined inside the transportation polytope.

        Returns:
            BoundPoint or None when no evaluated V meets the rate condition
        """
        if R <= 0:
            raise PreconditionError(f"R must be positive, got {R}", field="R")
        if P.size != self.B.size:
            raise PreconditionError(f"P has {P.size} entries, expected {self.B.size}", field="P")
        if P.is_point_mass:
            logger.info("Skipping V-search for a point-mass composition")
            return None

        evaluated: dict[bytes, BoundPoint] = {}

        def evaluate(V: ConditionalType, warm: BoundPoint | None) -> BoundPoint:
            key = V.V.tobytes()
            if key not in evaluated:
                evaluated[key] = self._bound_point(
                    rho, P, V, self.search_optimizer, self._search_cache, warm=warm
                )
            return evaluated[key]

        def admissible(point: BoundPoint) -> bool:
            return point.rate_threshold < R

        product = self.bound_point_marton(rho, P)
        evaluated[product.V.V.tobytes()] = product
        path = [(1.0, product)]
        for gamma in sorted(GAMMA_SCAN, reverse=True):
            if gamma < 1.0:
                path.append((gamma, evaluate(ConditionalType.mixture(P, gamma), path[-1][1])))

        for (upper, upper_point), (lower, lower_point) in zip(path, path[1:]):
            if admissible(upper_point) == admissible(lower_point):
                continue
            if admissible(upper_point):
                good, good_point, bad = upper, upper_point, lower
            else:
                good, good_point, bad = lower, lower_point, upper
            for _ in range(BISECTION_STEPS):
                middle = 0.5 * (good + bad)
                point = evaluate(ConditionalType.mixture(P, middle), good_point)
                if admissible(point):
                    good, good_point = middle, point
                else:
                    bad = middle
            logger.debug("Rate boundary at gamma=%.6g (threshold %.8g)", good, good_point.rate_threshold)

        candidates = [point for point in evaluated.values() if admissible(point)]
        if not candidates:
            logger.info("No evaluated V meets R=%g at rho=%g", R, rho)
            return None
        best = min(candidates, key=lambda point: (point.distance_bound, point.rate_threshold))
        best = self._refine(best, P, R, evaluate)
        logger.debug("V-search at rho=%g, R=%g: distance %.6g", rho, R, best.distance_bound)
        return best

    def _refine(
        self,
        best: BoundPoint,
        P: Composition,
        R: float,
        evaluate: Callable[[ConditionalType, BoundPoint | None], BoundPoint],
    ) -> BoundPoint:
        """
        First-improvement descent on J = P(x) V(x'|x) by 2x2 moves that keep both marginals.

        Sweep k pairs every row pair (a, b) with one column pair, the k-th after it in
        order, so sweep 0 moves mass between the diagonal and the off-diagonal of each
        2x2 block. At most SEARCH_REFINE_BUDGET moves are evaluated.
        """
        support = [int(x) for x in P.support]
        pairs = [(a, b) for a in support for b in support if a < b]
        budget = get_settings().SEARCH_REFINE_BUDGET
        spent = 0
        for step in REFINE_STEPS:
            for sweep in range(len(pairs)):
                improved = False
                for index, (a, b) in enumerate(pairs):
                    c, d = pairs[(index + sweep) % len(pairs)]
                    for sign in (1.0, -1.0):
                        if spent >= budget:
                            return best
                        J = P.P[:, None] * best.V.V
                        # +t on (a,c),(b,d) and -t on (a,d),(b,c) keeps row and column sums
                        limit = min(J[a, d], J[b, c]) if sign > 0 else min(J[a, c], J[b, d])
                        t = sign * step * limit
                        if t == 0:
                            continue
                        J[a, c] += t
                        J[b, d] += t
                        J[a, d] -= t
                        J[b, c] -= t
                        V = np.array(best.V.V)
                        for x in (a, b):
                            row = np.clip(J[x] / P.P[x], 0.0, None)
                            V[x] = row / row.sum()
                        spent += 1
                        candidate = evaluate(ConditionalType(V=V), best)
                        if candidate.rate_threshold < R and candidate.distance_bound < best.distance_bound:
                            best = candidate
                            improved = True
                            break
                if not improved and sweep > 0:
                    break
        logger.debug("Refinement used %d of %d moves", spent, budget)
        return best

    def bound_curve(
        self,
        P: Composition,
        R_grid: Sequence[float],
        rho_grid: Sequence[float] = DEFAULT_RHO_GRID,
        V: ConditionalType | None = None,
    ) -> DistanceBoundCurve:
        """
        Lower envelope over rho_grid of search_V, at each rate in R_grid.

        With a fixed V the search is skipped and each rho contributes bound_point(rho, P, V)
        wherever its threshold is below R. Rates are sorted ascending; a running minimum
        keeps the envelope nonincreasing. Rates with no admissible point get distance +inf
        and no provenance.
        """
        if len(R_grid) == 0 or len(rho_grid) == 0:
            raise PreconditionError("Rate and rho grids must be nonempty", field="R_grid")
        if any(rho < 1 for rho in rho_grid):
            raise PreconditionError("Every rho must be >= 1", field="rho_grid")
        if P.is_point_mass:
            raise PreconditionError("Point-mass compositions give a vacuous curve", field="P")

        fixed = {rho: self.bound_point(rho, P, V) for rho in rho_grid} if V is not None else {}

        points: list[CurvePoint] = []
        envelope: BoundPoint | None = None
        for R in sorted(R_grid):
            if R <= 0:
                raise PreconditionError(f"Rates must be positive, got {R}", field="R_grid")
            for rho in rho_grid:
                if V is None:
                    point = self.search_V(rho, P, R)
                else:
                    point = fixed[rho] if fixed[rho].rate_threshold < R else None
                if point is not None and (envelope is None or point.distance_bound < envelope.distance_bound):
                    envelope = point
            if envelope is None:
                points.append(CurvePoint(R=R, distance_bound=math.inf))
            else:
                points.append(CurvePoint(R=R, distance_bound=envelope.distance_bound, provenance=envelope))
            logger.info("R=%g: distance bound %.6g", R, points[-1].distance_bound)
        return DistanceBoundCurve(P=P, points=tuple(points))


def format_curve_csv(curve: DistanceBoundCurve) -> str:
    """R_nats,d_bound_nats,rho,V_flat,theta,mutual_info, one row per rate, full precision."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for point in curve.points:
        source = point.provenance
        if source is None:
            writer.writerow([repr(float(point.R)), "inf", "", "", "", ""])
            continue
        writer.writerow([
            repr(float(point.R)),
            repr(float(point.distance_bound)),
            repr(float(source.rho)),
            source.V.flat(),
            repr(float(source.theta_PV_value)),
            repr(float(source.mutual_info)),
        ])
    return buffer.getvalue()


def write_curve_csv(curve: DistanceBoundCurve, path: str | Path) -> None:
    Path(path).write_text(format_curve_csv(curve))


# ============================================================================
# Module-level convenience functions
# ============================================================================


def bound_point(
    channel: Channel, rho: float, P: Composition, V: ConditionalType, options: OptimizerOptions | None = None
) -> BoundPoint:
    """Shortcut for EliasBoundService(channel, options).bound_point()."""
    return EliasBoundService(channel, options).bound_point(rho, P, V)


def bound_point_marton(
    channel: Channel, rho: float, P: Composition, options: OptimizerOptions | None = None
) -> BoundPoint:
    """Shortcut for EliasBoundService(channel, options).bound_point_marton()."""
    return EliasBoundService(channel, options).bound_point_marton(rho, P)


def search_V(
    channel: Channel, rho: float, P: Composition, R: float, options: OptimizerOptions | None = None
) -> BoundPoint | None:
    """Shortcut for EliasBoundService(channel, options).search_V()."""
    return EliasBoundService(channel, options).search_V(rho, P, R)


def bound_curve(
    channel: Channel,
    P: Composition,
    rho_grid: Sequence[float] = DEFAULT_RHO_GRID,
    R_grid: Sequence[float] = (),
    options: OptimizerOptions | None = None,
) -> DistanceBoundCurve:
    """Shortcut for EliasBoundService(channel, options).bound_curve()."""
    return EliasBoundService(channel, options).bound_curve(P, R_grid, rho_grid)
