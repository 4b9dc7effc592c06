"""
Domain Models Package

Immutable pydantic models shared by the services and the CLI.
"""

from elias_theta.models.bound import BoundPoint, CurvePoint, DistanceBoundCurve
from elias_theta.models.certificate import (
    Handle,
    ObjectiveKind,
    Representation,
    ThetaCertificate,
)
from elias_theta.models.channel import (
    Channel,
    Composition,
    ConditionalType,
    GramMatrix,
    StateVectorSet,
)
from elias_theta.models.code import Code, VerificationReport

__all__ = [
    "BoundPoint",
    "Channel",
    "Code",
    "Composition",
    "ConditionalType",
    "CurvePoint",
    "DistanceBoundCurve",
    "GramMatrix",
    "Handle",
    "ObjectiveKind",
    "Representation",
    "StateVectorSet",
    "ThetaCertificate",
    "VerificationReport",
]
