"""
Code and Verification Report Models

Codes here are small block codes over the channel input alphabet, used by the
exhaustive oracle. Reports summarize a verification run in a form that can be
printed or dumped as JSON.
"""

from collections import Counter
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from elias_theta.exceptions import ChannelValidationError


class Code(BaseModel):
    """
    Block code of length n with M distinct codewords over an alphabet of size q.

    Attributes:
        n: Blocklength
        q: Alphabet size (number of channel inputs)
        codewords: Sequences of input indices, each of length n
    """

    model_config = ConfigDict(frozen=True)

    n: int
    q: int
    codewords: tuple[tuple[int, ...], ...]

    @model_validator(mode="after")
    def _check_invariants(self) -> "Code":
        if len(self.codewords) < 2:
            raise ChannelValidationError("A code needs at least 2 codewords", field="codewords")
        for index, word in enumerate(self.codewords):
            if len(word) != self.n:
                raise ChannelValidationError(
                    f"Codeword {index} has length {len(word)}, expected {self.n}",
                    field=f"codewords[{index}]",
                )
            if any(symbol < 0 or symbol >= self.q for symbol in word):
                raise ChannelValidationError(
                    f"Codeword {index} uses a symbol outside 0..{self.q - 1}",
                    field=f"codewords[{index}]",
                )
        if len(set(self.codewords)) != len(self.codewords):
            raise ChannelValidationError("Codewords must be distinct", field="codewords")
        return self

    @property
    def M(self) -> int:
        return len(self.codewords)

    def compositions(self) -> list[np.ndarray]:
        """Empirical distribution of symbols in each codeword."""
        result = []
        for word in self.codewords:
            counts = Counter(word)
            result.append(np.array([counts[x] / self.n for x in range(self.q)]))
        return result

    def is_constant_composition(self) -> bool:
        first, *rest = self.compositions()
        return all(np.array_equal(first, other) for other in rest)


class VerificationReport(BaseModel):
    """
    Outcome of an oracle run.

    Attributes:
        name: Which check produced the report
        checked: Number of instances examined
        violations: Instances that broke the inequality (full data for reproduction)
        tightest_instance: Instance with the smallest slack, for inspection
        details: Check-specific parameters (seed, grid, ...)
    """

    model_config = ConfigDict(frozen=True)

    name: str
    checked: int
    violations: list[dict[str, Any]]
    tightest_instance: dict[str, Any] | None = None
    details: dict[str, Any] = {}

    @property
    def passed(self) -> bool:
        return not self.violations

    def summary(self) -> dict[str, Any]:
        """The JSON summary {checked, violations, tightest_instance}."""
        return {
            "name": self.name,
            "checked": self.checked,
            "violations": self.violations,
            "tightest_instance": self.tightest_instance,
        }
