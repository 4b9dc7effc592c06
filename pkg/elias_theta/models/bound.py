"""
Bound Models

A BoundPoint is one (rate threshold, distance bound) pair obtained for a fixed
degree rho, composition P and stationary conditional type V: for every rate above
the threshold, rho * theta(rho, P, V) bounds the normalized minimum Bhattacharyya
distance of constant-composition codes. A DistanceBoundCurve is the lower envelope
of such points over a rate grid.
"""

from pydantic import BaseModel, ConfigDict, model_validator

from elias_theta.exceptions import PreconditionError
from elias_theta.models.certificate import ThetaCertificate
from elias_theta.models.channel import Composition, ConditionalType


class BoundPoint(BaseModel):
    """
    One point of the constant-composition Elias-type bound.

    Attributes:
        rho: Degree of the representations used
        P: Code composition
        V: Stationary conditional type (PV = P)
        theta_PV_value: Upper bound on theta(rho, P, V), nats
        mutual_info: I(P, V), nats
        rate_threshold: mutual_info + theta_PV_value, nats per channel use
        distance_bound: rho * theta_PV_value, nats
        certificates: Per-input certificates (None where P(x) = 0)
        degenerate: P is a point mass; the bound is vacuous
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    rho: float
    P: Composition
    V: ConditionalType
    theta_PV_value: float
    mutual_info: float
    rate_threshold: float
    distance_bound: float
    certificates: tuple[ThetaCertificate | None, ...]
    degenerate: bool = False

    @model_validator(mode="after")
    def _check_invariants(self) -> "BoundPoint":
        if self.mutual_info < 0 or self.distance_bound < 0:
            raise PreconditionError(
                "Bound points need nonnegative mutual information and distance",
                field="mutual_info",
            )
        if self.rate_threshold < self.theta_PV_value:
            raise PreconditionError("rate_threshold must be >= theta_PV_value", field="rate_threshold")
        return self


class CurvePoint(BaseModel):
    """
    Envelope value at one rate.

    ``provenance`` is None (and ``distance_bound`` +inf) when no evaluated
    (rho, V) pair has a rate threshold below R.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    R: float
    distance_bound: float
    provenance: BoundPoint | None = None


class DistanceBoundCurve(BaseModel):
    """Lower envelope of bound points for a fixed P, ordered by increasing rate."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    P: Composition
    points: tuple[CurvePoint, ...]

    @model_validator(mode="after")
    def _check_monotone(self) -> "DistanceBoundCurve":
        for previous, current in zip(self.points, self.points[1:]):
            if current.R < previous.R:
                raise PreconditionError("Curve points must be ordered by rate", field="points")
            if current.distance_bound > previous.distance_bound:
                raise PreconditionError(
                    f"Envelope increases between R={previous.R} and R={current.R}",
                    field="points",
                )
        return self
