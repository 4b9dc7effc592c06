"""
Base Theta Objective - Strategy Pattern Interface

Both theta quantities are functions of the inner products a_x = <psi~_x, f> between
the tilted vectors and the handle:

- minimax:   max_x log 1/a_x^2                (theta(rho))
- weighted:  sum_x Q(x) log 1/a_x^2           (theta(rho, Q))

The optimizer only needs three things from an objective: its exact value, a smooth
surrogate with gradient in the a_x, and a way to pick the best handle for fixed
vectors. Adding a new objective means subclassing BaseObjective and registering it
in the factory.
"""

from abc import ABC, abstractmethod

import numpy as np

from elias_theta.models import ObjectiveKind

# Below this inner product, -2 log a is continued by its second-order Taylor expansion.
SMOOTH_FLOOR = 1e-4


def log_penalty(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    phi(a) = -2 log a with a C1 quadratic continuation below SMOOTH_FLOOR.

    Returns:
        Tuple of (phi(a), phi'(a)) evaluated elementwise
    """
    a = np.asarray(a, dtype=float)
    safe = np.maximum(a, SMOOTH_FLOOR)
    value = -2.0 * np.log(safe)
    slope = -2.0 / safe
    below = a < SMOOTH_FLOOR
    if np.any(below):
        step = a[below] - SMOOTH_FLOOR
        curvature = 2.0 / SMOOTH_FLOOR**2
        value[below] = value[below] + slope[below] * step + 0.5 * curvature * step**2
        slope[below] = slope[below] + curvature * step
    return value, slope


def exact_log_penalty(a: np.ndarray) -> np.ndarray:
    """-2 ln |a| with +inf at zero; |a| is clipped to 1, the bound for unit vectors."""
    a = np.minimum(np.abs(np.asarray(a, dtype=float)), 1.0)
    with np.errstate(divide="ignore"):
        return -2.0 * np.log(a)


class BaseObjective(ABC):
    """
    Abstract base class for theta objectives.

    Subclasses define:
    - kind: ObjectiveKind stored in certificates
    - anneals: whether the smooth surrogate has a temperature to anneal

    Methods to implement:
    - value: exact objective from inner products
    - smoothed: surrogate value and gradient from inner products
    - best_handle: optimal (or locally optimal) handle for fixed vectors
    """

    kind: ObjectiveKind
    anneals: bool = False

    @property
    def weights(self) -> np.ndarray | None:
        """Composition stored in the certificate (None for minimax)."""
        return None

    @abstractmethod
    def value(self, inner: np.ndarray) -> float:
        """
        Exact objective in nats.

        Args:
            inner: Inner products <psi~_x, f>, one per input (signs ignored)

        Returns:
            float: Objective value, +inf if a relevant inner product vanishes
        """

    @abstractmethod
    def smoothed(self, inner: np.ndarray, temperature: float) -> tuple[float, np.ndarray]:
        """
        Smooth surrogate used during gradient optimization.

        Args:
            inner: Signed inner products <psi~_x, f>
            temperature: Soft-max temperature (ignored by objectives that do not anneal)

        Returns:
            Tuple of (surrogate value, gradient with respect to each inner product)
        """

    @abstractmethod
    def best_handle(
        self, vectors: np.ndarray, start: np.ndarray | None = None
    ) -> tuple[np.ndarray, float]:
        """
        Choose the handle for fixed vectors.

        Args:
            vectors: Tilted vectors, one per row
            start: Optional starting handle; the result is never worse than it

        Returns:
            Tuple of (unit handle, objective value at that handle)

        Raises:
            OptimizationError: If no handle with all relevant inner products nonzero exists
        """

    def evaluate(self, vectors: np.ndarray, f: np.ndarray) -> float:
        """Exact objective of a (vectors, handle) pair."""
        return self.value(vectors @ f)
