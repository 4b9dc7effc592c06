"""
Channel Domain Models

Immutable types for a discrete memoryless channel and the objects derived from it:
state vectors, their Gram matrix, compositions (types) and conditional types.

Model Design Decisions:
1. numpy arrays stored read-only: instances can be shared across threads freely
2. Validation happens once, at construction, and names the offending row
3. Channel is the single external input; everything else is derived from it
"""

import json
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from elias_theta.exceptions import ChannelValidationError

ROW_SUM_TOL = 1e-12
UNIT_NORM_TOL = 1e-12
PSD_TOL = 1e-9


def frozen_array(value: Any, ndim: int, name: str) -> np.ndarray:
    """Convert ``value`` to a read-only float64 array of the given rank."""
    try:
        array = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ChannelValidationError(f"{name} must be numeric", field=name) from None
    if array.ndim != ndim:
        raise ChannelValidationError(
            f"{name} must have {ndim} dimension(s), got shape {array.shape}", field=name
        )
    if not np.all(np.isfinite(array)):
        raise ChannelValidationError(f"{name} contains non-finite entries", field=name)
    array.setflags(write=False)
    return array


def check_stochastic_rows(matrix: np.ndarray, name: str) -> None:
    """Raise ChannelValidationError naming the first row that is not a distribution."""
    for index, row in enumerate(matrix):
        if np.any(row < 0):
            raise ChannelValidationError(
                f"{name} row {index} has a negative entry", field=f"{name}[{index}]"
            )
        total = float(row.sum())
        if abs(total - 1.0) > ROW_SUM_TOL:
            raise ChannelValidationError(
                f"{name} row {index} sums to {total!r}, expected 1", field=f"{name}[{index}]"
            )


class Channel(BaseModel):
    """
    Discrete memoryless channel W(y|x).

    Attributes:
        W: |X| x |Y| row-stochastic transition matrix, rows indexed by input
        input_labels: Optional display names for the inputs
        output_labels: Optional display names for the outputs
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    W: np.ndarray
    input_labels: tuple[str, ...] | None = None
    output_labels: tuple[str, ...] | None = None

    @field_validator("W", mode="before")
    @classmethod
    def _coerce_matrix(cls, value: Any) -> np.ndarray:
        return frozen_array(value, 2, "W")

    @model_validator(mode="after")
    def _check_invariants(self) -> "Channel":
        inputs, outputs = self.W.shape
        if inputs < 2:
            raise ChannelValidationError(
                f"A channel needs at least 2 inputs, got {inputs}", field="W"
            )
        if outputs < 1:
            raise ChannelValidationError("A channel needs at least 1 output", field="W")
        check_stochastic_rows(self.W, "W")
        if self.input_labels is not None and len(self.input_labels) != inputs:
            raise ChannelValidationError(
                f"Expected {inputs} input labels, got {len(self.input_labels)}",
                field="input_labels",
            )
        if self.output_labels is not None and len(self.output_labels) != outputs:
            raise ChannelValidationError(
                f"Expected {outputs} output labels, got {len(self.output_labels)}",
                field="output_labels",
            )
        return self

    @property
    def num_inputs(self) -> int:
        return self.W.shape[0]

    @property
    def num_outputs(self) -> int:
        return self.W.shape[1]

    @classmethod
    def from_dict(cls, data: dict) -> "Channel":
        """
        Build a channel from the JSON document layout.

        Args:
            data: {"W": [[...], ...], "input_labels": [...], "output_labels": [...]}

        Raises:
            ChannelValidationError: If "W" is missing or any invariant fails
        """
        if not isinstance(data, dict) or "W" not in data:
            raise ChannelValidationError("Channel document must contain 'W'", field="W")
        return cls(
            W=data["W"],
            input_labels=tuple(data["input_labels"]) if data.get("input_labels") else None,
            output_labels=tuple(data["output_labels"]) if data.get("output_labels") else None,
        )

    @classmethod
    def from_json_file(cls, path: str | Path) -> "Channel":
        """Parse a channel JSON file."""
        try:
            data = json.loads(Path(path).read_text())
        except OSError as e:
            raise ChannelValidationError(f"Cannot read channel file {path}: {e}", field="channel") from None
        except json.JSONDecodeError as e:
            raise ChannelValidationError(f"Invalid JSON in {path}: {e}", field="channel") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        data: dict[str, Any] = {"W": self.W.tolist()}
        if self.input_labels is not None:
            data["input_labels"] = list(self.input_labels)
        if self.output_labels is not None:
            data["output_labels"] = list(self.output_labels)
        return data


class StateVectorSet(BaseModel):
    """
    Channel state vectors psi_x(y) = sqrt(W(y|x)), one row per input.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    psi: np.ndarray

    @field_validator("psi", mode="before")
    @classmethod
    def _coerce(cls, value: Any) -> np.ndarray:
        return frozen_array(value, 2, "psi")

    @model_validator(mode="after")
    def _check_invariants(self) -> "StateVectorSet":
        norms = np.linalg.norm(self.psi, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_NORM_TOL)
        if bad.size:
            raise ChannelValidationError(
                f"State vector {bad[0]} has norm {norms[bad[0]]!r}", field=f"psi[{bad[0]}]"
            )
        if np.any(self.psi < 0):
            raise ChannelValidationError("State vectors must have nonnegative components", field="psi")
        return self

    @property
    def size(self) -> int:
        return self.psi.shape[0]


class GramMatrix(BaseModel):
    """
    Bhattacharyya inner products B[x][x'] = <psi_x, psi_x'>.

    Diagonal is exactly 1, entries lie in [0, 1] and exact zeros mark pairs that
    can never be confused at blocklength 1.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    B: np.ndarray

    @field_validator("B", mode="before")
    @classmethod
    def _coerce(cls, value: Any) -> np.ndarray:
        return frozen_array(value, 2, "B")

    @model_validator(mode="after")
    def _check_invariants(self) -> "GramMatrix":
        B = self.B
        if B.shape[0] != B.shape[1]:
            raise ChannelValidationError(f"Gram matrix must be square, got {B.shape}", field="B")
        if not np.array_equal(np.diag(B), np.ones(B.shape[0])):
            raise ChannelValidationError("Gram matrix diagonal must be exactly 1", field="B")
        if not np.array_equal(B, B.T):
            raise ChannelValidationError("Gram matrix must be symmetric", field="B")
        if np.any(B < 0) or np.any(B > 1):
            raise ChannelValidationError("Gram entries must lie in [0, 1]", field="B")
        smallest = float(np.linalg.eigvalsh(B)[0])
        if smallest < -PSD_TOL:
            raise ChannelValidationError(
                f"Gram matrix is not positive semidefinite (eigenvalue {smallest!r})", field="B"
            )
        return self

    @property
    def size(self) -> int:
        return self.B.shape[0]

    def caps(self, rho: float) -> np.ndarray:
        """Entrywise power B^{1/rho} with 0^{1/rho} = 0: the degree-rho constraint bounds."""
        caps = np.zeros_like(self.B)
        positive = self.B > 0
        caps[positive] = self.B[positive] ** (1.0 / rho)
        return caps


class Composition(BaseModel):
    """Probability vector P over the input alphabet."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    P: np.ndarray

    @field_validator("P", mode="before")
    @classmethod
    def _coerce(cls, value: Any) -> np.ndarray:
        return frozen_array(value, 1, "P")

    @model_validator(mode="after")
    def _check_invariants(self) -> "Composition":
        check_stochastic_rows(self.P[np.newaxis, :], "P")
        return self

    @property
    def size(self) -> int:
        return self.P.shape[0]

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.P > 0)

    @property
    def is_point_mass(self) -> bool:
        return self.support.size == 1

    @classmethod
    def uniform(cls, size: int) -> "Composition":
        return cls(P=np.full(size, 1.0 / size))


class ConditionalType(BaseModel):
    """Row-stochastic |X| x |X| matrix V[x][x'] = V(x'|x)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    V: np.ndarray

    @field_validator("V", mode="before")
    @classmethod
    def _coerce(cls, value: Any) -> np.ndarray:
        return frozen_array(value, 2, "V")

    @model_validator(mode="after")
    def _check_invariants(self) -> "ConditionalType":
        if self.V.shape[0] != self.V.shape[1]:
            raise ChannelValidationError(f"V must be square, got {self.V.shape}", field="V")
        check_stochastic_rows(self.V, "V")
        return self

    @property
    def size(self) -> int:
        return self.V.shape[0]

    def row(self, x: int) -> Composition:
        return Composition(P=self.V[x])

    @classmethod
    def identity(cls, size: int) -> "ConditionalType":
        return cls(V=np.eye(size))

    @classmethod
    def product(cls, P: Composition) -> "ConditionalType":
        """V(x'|x) = P(x'): every row equals P."""
        return cls(V=np.tile(P.P, (P.size, 1)))

    @classmethod
    def mixture(cls, P: Composition, gamma: float) -> "ConditionalType":
        """(1 - gamma) I + gamma 1 P^T: stationary for P at every gamma in [0, 1]."""
        V = (1.0 - gamma) * np.eye(P.size) + gamma * np.tile(P.P, (P.size, 1))
        return cls(V=V / V.sum(axis=1, keepdims=True))

    @classmethod
    def symmetric_flip(cls, size: int, flip: float) -> "ConditionalType":
        """Stay with probability 1 - flip, otherwise move uniformly to another input."""
        V = np.full((size, size), flip / (size - 1))
        np.fill_diagonal(V, 1.0 - flip)
        return cls(V=V)

    def flat(self) -> str:
        """Row-major, semicolon-separated rendering used in CSV output."""
        return ";".join(repr(float(v)) for v in self.V.ravel())
