"""
CLI Type Definitions

RunConfig is the validated form of one command-line invocation. argparse produces raw
strings; the validators here turn the list-valued flags into numbers so the command
handlers only see checked values.

List syntax:
- grids and distributions: comma-separated numbers, e.g. ``--rho-grid 1,10,1e4``
- matrices: rows separated by ``;``, e.g. ``--V "0.9,0.1;0.1,0.9"``
"""

import enum
from typing import Annotated, Any

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, field_validator

from elias_theta.config import get_settings
from elias_theta.services.theta_optimizer import OptimizerOptions


class Command(str, enum.Enum):
    THETA = "theta"
    THETA_WEIGHTED = "theta-weighted"
    BOUND_CURVE = "bound-curve"
    VERIFY = "verify"
    BINARY = "binary"


class VerifySuite(str, enum.Enum):
    LEMMA1 = "lemma1"
    THEOREM1 = "theorem1"
    ROWSUM = "rowsum"
    CLOSEDFORM = "closedform"


def parse_floats(value: Any) -> Any:
    if isinstance(value, str):
        items = [item.strip() for item in value.split(",") if item.strip()]
        try:
            return [float(item) for item in items]
        except ValueError:
            raise ValueError(f"expected comma-separated numbers, got {value!r}") from None
    return value


def parse_matrix(value: Any) -> Any:
    if isinstance(value, str):
        return [parse_floats(row) for row in value.split(";") if row.strip()]
    return value


FloatList = Annotated[list[float], BeforeValidator(parse_floats)]
Matrix = Annotated[list[list[float]], BeforeValidator(parse_matrix)]


class RunConfig(BaseModel):
    """
    One CLI invocation.

    Attributes:
        command: Subcommand to run
        suite: Verification suite (verify only)
        channel: Channel JSON path or built-in name
        rho: Degree for theta / theta-weighted / theorem1
        rho_grid: Degrees for bound-curve and binary
        P: Composition (theta-weighted, bound-curve); uniform when omitted
        V: Fixed conditional type for bound-curve; V-search when omitted
        R_grid: Rates for bound-curve, nats
        seed: Base seed
        restarts: Random restarts per optimization
        feas_tol: Certificate feasibility tolerance
        threads: Worker threads
        out: Certificate JSON (theta commands) or CSV (bound-curve) path
        bits: Display values in bits instead of nats
        trials: Randomized instances (lemma1, rowsum)
        n: Blocklength (theorem1)
        M: Number of codewords (theorem1), or vectors (lemma1)
        dim: Dimension (lemma1)
        theta: theta(rho) for theorem1; computed when omitted
        b01: Gram entry of a binary channel (binary)
        Z: Bhattacharyya distance of a binary channel (binary)
        lambdas: Flip probabilities for the binary table
    """

    model_config = ConfigDict(frozen=True)

    command: Command
    suite: VerifySuite | None = None
    channel: str | None = None
    rho: float = 1.0
    rho_grid: FloatList | None = None
    P: FloatList | None = None
    V: Matrix | None = None
    R_grid: FloatList | None = None
    seed: int = Field(default_factory=lambda: get_settings().SEED)
    restarts: int | None = None
    feas_tol: float | None = None
    threads: int | None = None
    out: str | None = None
    bits: bool = False
    trials: int = 10000
    n: int | None = None
    M: int | None = None
    dim: int | None = None
    theta: float | None = None
    b01: float | None = None
    Z: float | None = None
    lambdas: FloatList | None = None

    @field_validator("rho_grid", "R_grid", "lambdas")
    @classmethod
    def _nonempty(cls, value: list[float] | None) -> list[float] | None:
        if value is not None and not value:
            raise ValueError("grid must not be empty")
        return value

    @field_validator("rho")
    @classmethod
    def _rho_at_least_one(cls, value: float) -> float:
        if value < 1:
            raise ValueError(f"rho must be >= 1, got {value}")
        return value

    def optimizer_options(self) -> OptimizerOptions:
        """OptimizerOptions from the settings, overridden by the flags that were given."""
        overrides: dict[str, Any] = {"seed": self.seed}
        if self.restarts is not None:
            overrides["restarts"] = self.restarts
        if self.feas_tol is not None:
            overrides["feas_tol"] = self.feas_tol
        if self.threads is not None:
            overrides["threads"] = self.threads
        return OptimizerOptions(**overrides)
