"""
Concrete Theta Objectives

Objectives Overview:
--------------------
| Objective | Bounds        | Surrogate                      | Handle selection            |
|-----------|---------------|--------------------------------|-----------------------------|
| MINIMAX   | theta(rho)    | temperature soft-max of phi_x  | least-distance program      |
| WEIGHTED  | theta(rho, Q) | sum_x Q(x) phi_x               | damped Newton, concave form |

with phi_x = log 1/<psi~_x, f>^2.
"""

import logging

import numpy as np
from scipy.optimize import nnls
from scipy.special import logsumexp, softmax

from elias_theta.exceptions import OptimizationError
from elias_theta.models import ObjectiveKind
from elias_theta.objectives.base import BaseObjective, exact_log_penalty, log_penalty

logger = logging.getLogger(__name__)

NEWTON_MAX_ITER = 200
NEWTON_TOL = 1e-13


def _normalize(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def principal_direction(vectors: np.ndarray) -> np.ndarray:
    """Top eigenvector of sum_x psi~_x psi~_x^T, sign chosen so most inner products are positive."""
    _, eigenvectors = np.linalg.eigh(vectors.T @ vectors)
    direction = eigenvectors[:, -1]
    if np.sum(vectors @ direction) < 0:
        direction = -direction
    return direction


def least_distance_handle(oriented: np.ndarray) -> np.ndarray | None:
    """
    Unit f maximizing min_x <v_x, f> for sign-fixed vectors.

    Solves min ||g|| subject to <v_x, g> >= 1 through the Lawson-Hanson reduction of a
    least-distance program to NNLS; f = g / ||g||. Returns None when no g exists
    (the vectors admit no common positive direction).
    """
    count, dimension = oriented.shape
    E = np.vstack([oriented.T, np.ones((1, count))])
    target = np.zeros(dimension + 1)
    target[-1] = 1.0
    u, _ = nnls(E, target)
    residual = E @ u - target
    if np.linalg.norm(residual) < 1e-14 or residual[-1] >= 0:
        return None
    g = -residual[:-1] / residual[-1]
    return _normalize(g)


class MinimaxObjective(BaseObjective):
    """
    max_x log 1/<psi~_x, f>^2.

    - Surrogate: tau * logsumexp(phi / tau), annealed toward the exact max
    - Handle: exact for each sign pattern tried (least-distance program)
    """

    kind = ObjectiveKind.MINIMAX
    anneals = True

    def value(self, inner: np.ndarray) -> float:
        return float(np.max(exact_log_penalty(inner)))

    def smoothed(self, inner: np.ndarray, temperature: float) -> tuple[float, np.ndarray]:
        phi, slope = log_penalty(inner)
        scaled = phi / temperature
        return float(temperature * logsumexp(scaled)), softmax(scaled) * slope

    def best_handle(
        self, vectors: np.ndarray, start: np.ndarray | None = None
    ) -> tuple[np.ndarray, float]:
        starts = [] if start is None else [np.asarray(start, dtype=float)]
        starts.append(principal_direction(vectors))
        starts.extend(vectors)

        best_f, best_value = None, np.inf
        if start is not None:
            best_f = _normalize(np.asarray(start, dtype=float))
            best_value = self.evaluate(vectors, best_f)
        for candidate in starts:
            signs = np.where(vectors @ candidate < 0, -1.0, 1.0)
            f = least_distance_handle(vectors * signs[:, None])
            if f is None:
                continue
            value = self.evaluate(vectors, f)
            if value < best_value:
                best_f, best_value = f, value

        if best_f is None or not np.isfinite(best_value):
            raise OptimizationError(
                "No handle has a nonzero inner product with every representation vector",
                field="handle",
            )
        return best_f, best_value


class WeightedObjective(BaseObjective):
    """
    sum_x Q(x) log 1/<psi~_x, f>^2.

    - Surrogate: the objective itself with the smoothed logarithm
    - Handle: damped Newton ascent on H(g) = sum_x Q(x) ln <psi~_x, g> - ||g||^2 / 2

    H is strictly concave on the sign pattern of the start and its maximizer g* has unit
    norm with g* = sum_x Q(x) psi~_x / <psi~_x, g*>, so g* is the optimal handle for that
    pattern. Every accepted step raises H, hence the objective never increases.
    """

    kind = ObjectiveKind.WEIGHTED

    def __init__(self, Q: np.ndarray):
        self.Q = np.asarray(Q, dtype=float)
        self.support = self.Q > 0

    @property
    def weights(self) -> np.ndarray:
        return self.Q

    def value(self, inner: np.ndarray) -> float:
        inner = np.asarray(inner, dtype=float)
        return float(np.sum(self.Q[self.support] * exact_log_penalty(inner[self.support])))

    def smoothed(self, inner: np.ndarray, temperature: float) -> tuple[float, np.ndarray]:
        phi, slope = log_penalty(inner)
        return float(np.sum(self.Q * phi)), self.Q * slope

    def stationarity(self, vectors: np.ndarray, f: np.ndarray) -> float:
        """||f - normalize(sum_x Q(x) psi~_x / <psi~_x, f>)||, zero at the optimal handle."""
        inner = vectors @ f
        g = (self.Q[self.support] / inner[self.support]) @ vectors[self.support]
        return float(np.linalg.norm(f - _normalize(g)))

    def best_handle(
        self, vectors: np.ndarray, start: np.ndarray | None = None
    ) -> tuple[np.ndarray, float]:
        if start is None:
            start, _ = MinimaxObjective().best_handle(vectors)
        f = _normalize(np.asarray(start, dtype=float))
        inner = vectors @ f
        if np.any(inner[self.support] == 0):
            raise OptimizationError(
                "Starting handle is orthogonal to a weighted representation vector", field="handle"
            )
        signs = np.where(inner < 0, -1.0, 1.0)
        oriented = vectors * signs[:, None]
        g = _newton_ascent(oriented[self.support], self.Q[self.support], f)
        f = _normalize(g)
        return f, self.evaluate(oriented, f)


def _concave_potential(active: np.ndarray, weights: np.ndarray, g: np.ndarray) -> float:
    inner = active @ g
    if np.any(inner <= 0):
        return -np.inf
    return float(weights @ np.log(inner) - 0.5 * (g @ g))


def _newton_ascent(active: np.ndarray, weights: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Maximize sum_x w_x ln <v_x, g> - ||g||^2 / 2 from an interior g."""
    identity = np.eye(g.size)
    current = _concave_potential(active, weights, g)
    for _ in range(NEWTON_MAX_ITER):
        inner = active @ g
        gradient = (weights / inner) @ active - g
        if np.linalg.norm(gradient) < NEWTON_TOL:
            break
        hessian = (active.T * (weights / inner**2)) @ active + identity
        direction = np.linalg.solve(hessian, gradient)
        decrement = float(gradient @ direction)
        step = 1.0
        while step > 1e-12:
            candidate = g + step * direction
            value = _concave_potential(active, weights, candidate)
            # below round-off the full Newton step is taken once it stays interior
            if value >= current + 0.25 * step * decrement or (
                decrement < NEWTON_TOL and np.isfinite(value)
            ):
                break
            step *= 0.5
        else:
            logger.debug("Newton line search stalled, gradient norm %.3g", np.linalg.norm(gradient))
            break
        g, current = candidate, max(value, current)
    return g
