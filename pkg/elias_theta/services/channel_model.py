"""
Channel Model Service

Builds the geometric objects every bound consumes from a raw channel matrix:
state vectors, the Bhattacharyya Gram matrix, symbol distances, zero-error pairs,
and the information quantities of a (composition, conditional type) pair.

Conventions:
- Natural logarithms everywhere; rates and distances are in nats
- Infinite distances are math.inf, never a large finite stand-in
- Gram entries below ZERO_SNAP are set to exactly 0 so confusability is discrete
"""

import logging
import math

import numpy as np

from elias_theta.exceptions import EliasThetaError, PreconditionError
from elias_theta.models import (
    Channel,
    Composition,
    ConditionalType,
    GramMatrix,
    Representation,
    StateVectorSet,
)
from elias_theta.models.channel import PSD_TOL

logger = logging.getLogger(__name__)

ZERO_SNAP = 1e-14
FACTORIZATION_TOL = 1e-8


def state_vectors(channel: Channel) -> StateVectorSet:
    """
    State vectors psi_x(y) = sqrt(W(y|x)).

    Each row is renormalized so round-off in the row sums cannot break the unit-norm
    invariant; the channel itself was already validated on construction.
    """
    psi = np.sqrt(channel.W)
    psi = psi / np.linalg.norm(psi, axis=1, keepdims=True)
    return StateVectorSet(psi=psi)


def gram(sv: StateVectorSet) -> GramMatrix:
    """
    Gram matrix B[x][x'] = sum_y sqrt(W(y|x) W(y|x')).

    Entries are clipped to [0, 1], symmetrized, given an exact unit diagonal and
    snapped to exact zero below ZERO_SNAP.
    """
    B = sv.psi @ sv.psi.T
    B = np.clip((B + B.T) / 2.0, 0.0, 1.0)
    B[B < ZERO_SNAP] = 0.0
    np.fill_diagonal(B, 1.0)
    return GramMatrix(B=B)


def channel_gram(channel: Channel) -> GramMatrix:
    """Shortcut for gram(state_vectors(channel))."""
    return gram(state_vectors(channel))


def bhattacharyya_matrix(B: GramMatrix) -> np.ndarray:
    """
    Symbol distances d[x][x'] = -ln B[x][x'] in nats.

    Pairs with B = 0 get +inf; the diagonal is exactly 0.
    """
    distances = np.full(B.B.shape, math.inf)
    positive = B.B > 0
    distances[positive] = -np.log(B.B[positive])
    np.fill_diagonal(distances, 0.0)
    # -log(1.0) is -0.0
    return np.abs(distances)


def zero_error_pairs(B: GramMatrix) -> list[tuple[int, int]]:
    """Unordered pairs {x, x'} (x < x') whose state vectors are orthogonal."""
    rows, cols = np.nonzero(np.triu(B.B == 0, k=1))
    return list(zip(rows.tolist(), cols.tolist()))


def sequence_state_vector(sv: StateVectorSet, x: tuple[int, ...]) -> np.ndarray:
    """Kronecker product psi_{x_1} (x) ... (x) psi_{x_n} of a sequence's state vectors."""
    result = np.ones(1)
    for symbol in x:
        result = np.kron(result, sv.psi[symbol])
    return result


def mutual_information(P: Composition, V: ConditionalType) -> float:
    """
    I(P, V) = sum_{x,x'} P(x) V(x'|x) ln(V(x'|x) / (PV)(x')) in nats, with 0 ln 0 = 0.

    Raises:
        EliasThetaError: If (PV)(x') = 0 while some P(x) V(x'|x) > 0 (cannot happen
            for valid inputs; indicates corrupted arrays)
    """
    if P.size != V.size:
        raise PreconditionError(
            f"P has {P.size} entries but V is {V.size}x{V.size}", field="V"
        )
    joint = P.P[:, None] * V.V
    output = P.P @ V.V
    mask = joint > 0
    if np.any(mask & (output[None, :] <= 0)):
        raise EliasThetaError("Inconsistent joint distribution: PV vanishes on its support")
    ratio = V.V[mask] / np.broadcast_to(output, V.V.shape)[mask]
    value = float(np.sum(joint[mask] * np.log(ratio)))
    return max(value, 0.0)


def stationarity_residual(P: Composition, V: ConditionalType) -> float:
    """max_x' |(PV)(x') - P(x')|."""
    return float(np.max(np.abs(P.P @ V.V - P.P)))


def is_stationary(P: Composition, V: ConditionalType, tol: float = 1e-9) -> bool:
    """True iff PV = P within ``tol`` in every coordinate."""
    return stationarity_residual(P, V) <= tol


def is_nonneg_definite_at(B: GramMatrix, rho: float) -> bool:
    """True iff the entrywise power B^{1/rho} is positive semidefinite (eigenvalue tolerance 1e-9)."""
    if rho < 1:
        raise PreconditionError(f"rho must be >= 1, got {rho}", field="rho")
    return float(np.linalg.eigvalsh(B.caps(rho))[0]) >= -PSD_TOL


def exact_representation(B: GramMatrix, rho: float) -> Representation:
    """
    Representation meeting every degree-rho constraint with equality.

    Factorizes B^{1/rho} = U diag(w) U^T and takes the rows of U sqrt(w) (negative
    round-off eigenvalues clipped), then renormalizes each row.

    Raises:
        PreconditionError: If B is not nonnegative-definite at rho; use the optimizer
    """
    if not is_nonneg_definite_at(B, rho):
        raise PreconditionError(
            f"Gram matrix is not nonnegative-definite at rho={rho}; "
            "no exact representation exists, use optimize_theta instead",
            field="rho",
        )
    target = B.caps(rho)
    eigenvalues, eigenvectors = np.linalg.eigh(target)
    vectors = eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))
    vectors = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
    error = float(np.max(np.abs(vectors @ vectors.T - target)))
    if error > FACTORIZATION_TOL:
        logger.warning("Exact factorization at rho=%g reproduces the target within %.3g", rho, error)
    return Representation(vectors=vectors, rho=rho, gram=B)
