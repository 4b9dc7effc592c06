"""
Binary Analytic Service

Closed-form theta(rho, Q) for binary-input channels and the classical Elias limit.

For two inputs at Bhattacharyya distance Z the optimal degree-rho representation is a
pair of unit vectors at angle 2*alpha with cos(2 alpha) = exp(-Z / rho); the handle sits
at angle beta from the bisector, sin(2 beta) = (Q(0) - Q(1)) sin(2 alpha), giving

    theta(rho, Q) = -2 Q(0) log cos(alpha - beta) - 2 Q(1) log cos(alpha + beta)

As rho grows, rho * theta(rho, Q) tends to 2 Q(0) Q(1) Z, which with Q = (1 - lam, lam)
and the rate condition ln 2 - h(lam) < R is the Elias bound.
"""

import logging
import math

from pydantic import BaseModel, ConfigDict
from scipy.optimize import brentq

from elias_theta.exceptions import PreconditionError
from elias_theta.models import Composition

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)


class BinaryGeometry(BaseModel):
    """
    Optimal binary representation and handle angles.

    Attributes:
        Z: Bhattacharyya distance between the inputs, nats
        rho: Degree
        alpha: Half-angle between the tilted vectors, radians
        Q: Binary composition
        beta: Handle angle from the bisector, toward input 0 when Q(0) > Q(1)
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    Z: float
    rho: float
    alpha: float
    Q: Composition
    beta: float


def _binary_composition(Q: Composition | tuple[float, float]) -> Composition:
    composition = Q if isinstance(Q, Composition) else Composition(P=list(Q))
    if composition.size != 2:
        raise PreconditionError(f"Binary composition expected, got {composition.size} entries", field="Q")
    return composition


def z_from_gram(b01: float) -> float:
    """Z = -ln b01, +inf for orthogonal inputs."""
    if not 0.0 <= b01 <= 1.0:
        raise PreconditionError(f"Gram entry must lie in [0, 1], got {b01}", field="b01")
    if b01 == 0.0:
        return math.inf
    return abs(-math.log(b01))


def binary_geometry(Z: float, rho: float, Q: Composition | tuple[float, float]) -> BinaryGeometry:
    """
    Angles of the optimal binary representation.

    The minimizing branch of sin(2 beta) = (Q(0) - Q(1)) sin(2 alpha) is |beta| <= alpha,
    signed like Q(0) - Q(1).

    Raises:
        PreconditionError: If Z is infinite or negative, or rho < 1
    """
    Q = _binary_composition(Q)
    if math.isinf(Z) or Z < 0:
        raise PreconditionError(
            f"Binary closed form needs a finite nonnegative Z, got {Z}; "
            "orthogonal inputs are outside its setting",
            field="Z",
        )
    if rho < 1:
        raise PreconditionError(f"rho must be >= 1, got {rho}", field="rho")
    alpha = 0.5 * math.acos(math.exp(-Z / rho))
    beta = 0.5 * math.asin(max(-1.0, min(1.0, (Q.P[0] - Q.P[1]) * math.sin(2.0 * alpha))))
    return BinaryGeometry(Z=Z, rho=rho, alpha=alpha, Q=Q, beta=beta)


def binary_objective(geometry: BinaryGeometry, beta: float | None = None) -> float:
    """-2 Q(0) log cos(alpha - beta) - 2 Q(1) log cos(alpha + beta), at the optimal beta by default."""
    beta = geometry.beta if beta is None else beta
    Q0, Q1 = geometry.Q.P
    value = 0.0
    if Q0 > 0:
        value -= 2.0 * Q0 * math.log(math.cos(geometry.alpha - beta))
    if Q1 > 0:
        value -= 2.0 * Q1 * math.log(math.cos(geometry.alpha + beta))
    return value


def binary_theta(Z: float, rho: float, Q: Composition | tuple[float, float]) -> float:
    """
    theta(rho, Q) of a binary channel with Bhattacharyya distance Z, in nats.

    Raises:
        PreconditionError: If Z is infinite (orthogonal inputs)
    """
    return max(binary_objective(binary_geometry(Z, rho, Q)), 0.0)


def binary_entropy(lam: float) -> float:
    """h(lam) in nats, with h(0) = h(1) = 0."""
    if not 0.0 <= lam <= 1.0:
        raise PreconditionError(f"lambda must lie in [0, 1], got {lam}", field="lambda")
    if lam in (0.0, 1.0):
        return 0.0
    return -lam * math.log(lam) - (1.0 - lam) * math.log1p(-lam)


def elias_limit(lam: float, Z: float) -> tuple[float, float]:
    """
    Classical Elias pair: above rate ln 2 - h(lam), distances are at most 2 lam (1 - lam) Z.

    Returns:
        Tuple of (rate_threshold, distance_bound)
    """
    if not 0.0 <= lam <= 0.5:
        raise PreconditionError(f"lambda must lie in [0, 1/2], got {lam}", field="lambda")
    if math.isinf(Z):
        raise PreconditionError("Elias limit needs a finite Z", field="Z")
    return LN2 - binary_entropy(lam), 2.0 * lam * (1.0 - lam) * Z


def elias_lambda(R: float) -> float:
    """
    The lam in [0, 1/2] solving ln 2 - h(lam) = R.

    Rates at or above ln 2 give 0, rates at or below 0 give 1/2.
    """
    if R >= LN2:
        return 0.0
    if R <= 0:
        return 0.5
    return float(brentq(lambda lam: LN2 - binary_entropy(lam) - R, 0.0, 0.5, xtol=1e-15))


def elias_curve(R: float, Z: float) -> float:
    """Classical Elias distance bound 2 lam (1 - lam) Z at rate R."""
    return elias_limit(elias_lambda(R), Z)[1]


def rho_theta_limit(Q: Composition | tuple[float, float], Z: float) -> float:
    """lim rho * theta(rho, Q) = 2 Q(0) Q(1) Z for binary channels."""
    Q = _binary_composition(Q)
    if math.isinf(Z):
        return math.inf if Q.P[0] * Q.P[1] > 0 else 0.0
    return 2.0 * Q.P[0] * Q.P[1] * Z
