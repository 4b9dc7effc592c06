"""
Representation and Certificate Models

A degree-rho orthonormal representation assigns a tilted unit vector to every input;
together with a unit handle it certifies an upper bound on a theta quantity. The
certificate stores everything needed to re-verify that bound independently.

Model Design Decisions:
1. ObjectiveKind as a str Enum: serializes directly into certificate JSON
2. Vectors stored row-wise (one row per input), dimension equal to |X|
3. Certificates are immutable; the optimizer builds new ones instead of mutating
"""

import enum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from elias_theta.exceptions import ChannelValidationError
from elias_theta.models.channel import GramMatrix, frozen_array

UNIT_NORM_TOL = 1e-10


class ObjectiveKind(str, enum.Enum):
    """
    Which theta objective a certificate bounds.

    MINIMAX: max_x log 1/<psi~_x, f>^2, bounds theta(rho)
    WEIGHTED: sum_x Q(x) log 1/<psi~_x, f>^2, bounds theta(rho, Q)
    """

    MINIMAX = "minimax"
    WEIGHTED = "weighted"


class Representation(BaseModel):
    """
    Tilted unit vectors {psi~_x} of degree rho.

    Attributes:
        vectors: One unit row vector per input
        rho: Degree, at least 1
        gram: Source Gram matrix whose entrywise 1/rho power bounds |<psi~_x, psi~_x'>|
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    vectors: np.ndarray
    rho: float
    gram: GramMatrix

    @field_validator("vectors", mode="before")
    @classmethod
    def _coerce(cls, value: Any) -> np.ndarray:
        return frozen_array(value, 2, "vectors")

    @model_validator(mode="after")
    def _check_invariants(self) -> "Representation":
        if self.rho < 1:
            raise ChannelValidationError(f"rho must be >= 1, got {self.rho}", field="rho")
        if self.vectors.shape[0] != self.gram.size:
            raise ChannelValidationError(
                f"Expected {self.gram.size} vectors, got {self.vectors.shape[0]}", field="vectors"
            )
        norms = np.linalg.norm(self.vectors, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_NORM_TOL)
        if bad.size:
            raise ChannelValidationError(
                f"Representation vector {bad[0]} has norm {norms[bad[0]]!r}",
                field=f"vectors[{bad[0]}]",
            )
        return self

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def inner_products(self) -> np.ndarray:
        return self.vectors @ self.vectors.T

    def oriented(self, handle: "Handle") -> "Representation":
        """Flip vector signs so every <psi~_x, f> is nonnegative (feasibility is sign-blind)."""
        signs = np.where(self.vectors @ handle.f < 0, -1.0, 1.0)
        return self.model_copy(update={"vectors": frozen_array(self.vectors * signs[:, None], 2, "vectors")})


class Handle(BaseModel):
    """Unit vector f in the representation space."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    f: np.ndarray

    @field_validator("f", mode="before")
    @classmethod
    def _coerce(cls, value: Any) -> np.ndarray:
        return frozen_array(value, 1, "f")

    @model_validator(mode="after")
    def _check_invariants(self) -> "Handle":
        norm = float(np.linalg.norm(self.f))
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise ChannelValidationError(f"Handle has norm {norm!r}", field="f")
        return self

    @classmethod
    def normalized(cls, f: np.ndarray) -> "Handle":
        return cls(f=np.asarray(f, dtype=float) / np.linalg.norm(f))


class ThetaCertificate(BaseModel):
    """
    Machine-checkable upper bound on theta(rho) or theta(rho, Q).

    Attributes:
        representation: Feasible (up to feasibility_residual) degree-rho representation
        handle: Unit handle at which value was evaluated
        value: Objective at (representation, handle), in nats
        feasibility_residual: Largest constraint violation of the representation
        objective_kind: MINIMAX or WEIGHTED
        weights: Q for WEIGHTED certificates
        feas_tol: Tolerance the residual is judged against
        restarts_used: Number of optimization starts that were run
        converged: Whether the winning start met the convergence criterion
        seed: Base seed of the run
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    representation: Representation
    handle: Handle
    value: float
    feasibility_residual: float
    objective_kind: ObjectiveKind
    weights: np.ndarray | None = None
    feas_tol: float = 1e-8
    restarts_used: int = 0
    converged: bool = True
    seed: int = 0

    @field_validator("weights", mode="before")
    @classmethod
    def _coerce_weights(cls, value: Any) -> np.ndarray | None:
        return None if value is None else frozen_array(value, 1, "weights")

    @property
    def rho(self) -> float:
        return self.representation.rho

    @property
    def is_valid(self) -> bool:
        return self.feasibility_residual <= self.feas_tol

    def to_json_dict(self) -> dict:
        """Serialize with everything an independent verifier needs."""
        return {
            "rho": self.rho,
            "value": self.value,
            "residual": self.feasibility_residual,
            "objective_kind": self.objective_kind.value,
            "weights": None if self.weights is None else self.weights.tolist(),
            "gram": self.representation.gram.B.tolist(),
            "vectors": self.representation.vectors.tolist(),
            "handle": self.handle.f.tolist(),
            "feas_tol": self.feas_tol,
            "restarts_used": self.restarts_used,
            "converged": self.converged,
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ThetaCertificate":
        gram = GramMatrix(B=data["gram"])
        return cls(
            representation=Representation(vectors=data["vectors"], rho=data["rho"], gram=gram),
            handle=Handle(f=data["handle"]),
            value=data["value"],
            feasibility_residual=data["residual"],
            objective_kind=ObjectiveKind(data["objective_kind"]),
            weights=data.get("weights"),
            feas_tol=data.get("feas_tol", 1e-8),
            restarts_used=data.get("restarts_used", 0),
            converged=data.get("converged", True),
            seed=data.get("seed", 0),
        )
