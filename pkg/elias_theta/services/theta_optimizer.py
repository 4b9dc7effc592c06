"""
Theta Optimizer Service

Computes certified upper bounds on theta(rho), theta(rho, Q) and theta(rho, P, V).
Any feasible (representation, handle) pair certifies an upper bound, so the search
is best-effort while feasibility is enforced exactly:

1. Candidate starts: a warm-start certificate, the orthonormal basis (always
   feasible), the exact factorization when B^{1/rho} is PSD, and seeded random starts
2. Local search: augmented Lagrangian on the pair constraints, L-BFGS on the sphere
   (rows normalized), handle fixed to e_1 by rotation invariance; the minimax
   objective is smoothed by an annealed soft-max
3. Repair: violated pairs are rotated apart in their own plane until the residual
   is below feas_tol
4. Polish: the objective strategy picks the best handle for the final vectors
5. Reduction: the smallest value over valid candidates wins

Design Decisions:
1. Representation dimension is |X|: the handle can be projected onto the span of the
   vectors without decreasing any |<psi~_x, f>|
2. Real vectors only; constraints bound |<psi~_x, psi~_x'>|
3. Candidates are independent and may run on worker threads; each owns its RNG
   (seed + restart index), so results do not depend on scheduling
"""

import logging
import math
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import minimize

from elias_theta.config import get_settings
from elias_theta.exceptions import OptimizationError, PreconditionError
from elias_theta.models import (
    Composition,
    ConditionalType,
    GramMatrix,
    Handle,
    ObjectiveKind,
    Representation,
    ThetaCertificate,
)
from elias_theta.objectives import BaseObjective, WeightedObjective, get_objective
from elias_theta.services.channel_model import exact_representation, is_nonneg_definite_at

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

AUDIT_VALUE_TOL = 1e-10
STATIONARITY_TOL = 1e-8
REPAIR_SWEEPS = 500


def _setting(name: str):
    return lambda: getattr(get_settings(), name)


class OptimizerOptions(BaseModel):
    """
    Knobs for a theta optimization. Defaults come from Settings.

    Attributes:
        seed: Base seed; random restart k uses seed + k
        restarts: Number of random starts (deterministic starts are always added)
        feas_tol: Residual a certificate must meet
        conv_tol: Objective change regarded as converged
        conv_window: Inner iterations over which conv_tol is measured
        max_iter: Iteration budget per start
        threads: Worker threads for independent starts and subproblems
        temperature_start: Initial soft-max temperature (minimax only)
        temperature_end: Final soft-max temperature (minimax only)
        initial_penalty: Initial augmented-Lagrangian penalty
        max_penalty: Penalty cap
        outer_iterations: Multiplier updates per start
    """

    model_config = ConfigDict(frozen=True)

    seed: int = Field(default_factory=_setting("SEED"))
    restarts: int = Field(default_factory=_setting("RESTARTS"), ge=0)
    feas_tol: float = Field(default_factory=_setting("FEAS_TOL"), gt=0)
    conv_tol: float = Field(default_factory=_setting("CONV_TOL"), gt=0)
    conv_window: int = Field(default_factory=_setting("CONV_WINDOW"), ge=1)
    max_iter: int = Field(default_factory=_setting("MAX_ITER"), ge=1)
    threads: int = Field(default_factory=_setting("THREADS"), ge=1)
    temperature_start: float = 0.5
    temperature_end: float = 1e-3
    initial_penalty: float = 10.0
    max_penalty: float = 1e10
    outer_iterations: int = 40


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int) -> list[R]:
    """Order-preserving map, on a thread pool when threads > 1."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(fn, items))


# ============================================================================
# Feasibility and values of a fixed representation
# ============================================================================


def _residual(vectors: np.ndarray, caps: np.ndarray) -> float:
    if vectors.shape[0] < 2:
        return 0.0
    excess = np.abs(vectors @ vectors.T) - caps
    upper = np.triu_indices(vectors.shape[0], k=1)
    return float(max(0.0, np.max(excess[upper])))


def feasibility_residual(rep: Representation, B: GramMatrix) -> float:
    """
    max over x != x' of max(0, |<psi~_x, psi~_x'>| - B[x][x']^{1/rho}).

    Raises:
        PreconditionError: If the representation and B disagree on |X|
    """
    if rep.size != B.size:
        raise PreconditionError(
            f"Representation has {rep.size} vectors but B is {B.size}x{B.size}", field="rep"
        )
    return _residual(rep.vectors, B.caps(rep.rho))


def value_minimax(rep: Representation) -> tuple[Handle, float]:
    """
    Handle and value max_x ln 1/<psi~_x, f>^2 of a representation.

    The handle maximizes min_x |<psi~_x, f>| exactly for each sign pattern tried, so
    the value is an upper bound on the representation's true minimax value.

    Raises:
        OptimizationError: If no handle has a nonzero inner product with every vector
    """
    f, value = get_objective(ObjectiveKind.MINIMAX).best_handle(rep.vectors)
    return Handle.normalized(f), value


def value_weighted(rep: Representation, Q: Composition) -> tuple[Handle, float]:
    """
    Handle and value sum_x Q(x) ln 1/<psi~_x, f>^2 of a representation.

    The handle is the fixed point f ∝ sum_x Q(x) psi~_x / <psi~_x, f>, reached by Newton
    ascent from the minimax handle.

    Raises:
        PreconditionError: If Q is not over the same alphabet
        OptimizationError: If no suitable starting handle exists
    """
    if Q.size != rep.size:
        raise PreconditionError(f"Q has {Q.size} entries, expected {rep.size}", field="Q")
    objective = WeightedObjective(Q.P)
    f, value = objective.best_handle(rep.vectors)
    stationarity = objective.stationarity(rep.vectors, f)
    if stationarity > STATIONARITY_TOL:
        logger.warning("Weighted handle stationarity residual %.3g above %.1g", stationarity, STATIONARITY_TOL)
    return Handle.normalized(f), value


class CertificateAudit(BaseModel):
    """Result of recomputing a certificate from its stored vectors and handle."""

    model_config = ConfigDict(frozen=True)

    recomputed_value: float
    recomputed_residual: float
    value_matches: bool
    residual_matches: bool
    feasible: bool

    @property
    def passed(self) -> bool:
        return self.value_matches and self.residual_matches and self.feasible


def audit_certificate(cert: ThetaCertificate, B: GramMatrix | None = None) -> CertificateAudit:
    """
    Recompute value and residual of a certificate.

    Args:
        cert: Certificate to check
        B: Gram matrix to check against (defaults to the one stored in the certificate)
    """
    gram = B if B is not None else cert.representation.gram
    objective = get_objective(cert.objective_kind, cert.weights)
    value = objective.evaluate(cert.representation.vectors, cert.handle.f)
    residual = feasibility_residual(cert.representation, gram)
    return CertificateAudit(
        recomputed_value=value,
        recomputed_residual=residual,
        value_matches=abs(value - cert.value) <= AUDIT_VALUE_TOL,
        residual_matches=abs(residual - cert.feasibility_residual) <= AUDIT_VALUE_TOL,
        feasible=residual <= cert.feas_tol,
    )


# ============================================================================
# Local search
# ============================================================================


def _align_to_first_axis(vectors: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Reflect the configuration so the handle becomes e_1, and orient vectors toward it."""
    e1 = np.zeros_like(f)
    e1[0] = 1.0
    w = f - e1
    norm = np.linalg.norm(w)
    if norm > 1e-15:
        w = w / norm
        vectors = vectors - 2.0 * np.outer(vectors @ w, w)
    signs = np.where(vectors[:, 0] < 0, -1.0, 1.0)
    return vectors * signs[:, None]


def _perpendicular(m: np.ndarray) -> np.ndarray:
    """Deterministic unit vector orthogonal to the unit vector m."""
    basis = np.eye(m.size)
    projected = basis - np.outer(basis @ m, m)
    best = int(np.argmax(np.linalg.norm(projected, axis=1)))
    return projected[best] / np.linalg.norm(projected[best])


def _set_pair_inner(vi: np.ndarray, vj: np.ndarray, target: float) -> tuple[np.ndarray, np.ndarray]:
    """Rotate two unit vectors symmetrically within their plane to inner product ``target``."""
    bisector = vi + vj
    if np.linalg.norm(bisector) < 1e-12:
        bisector = _perpendicular(_unit(vi - vj))
    bisector = _unit(bisector)
    spread = vi - vj - ((vi - vj) @ bisector) * bisector
    if np.linalg.norm(spread) < 1e-12:
        spread = _perpendicular(bisector)
    spread = _unit(spread)
    half = 0.5 * math.acos(min(1.0, max(-1.0, target)))
    return (
        math.cos(half) * bisector + math.sin(half) * spread,
        math.cos(half) * bisector - math.sin(half) * spread,
    )


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def repair(vectors: np.ndarray, caps: np.ndarray, feas_tol: float) -> tuple[np.ndarray, float]:
    """
    Shrink violated inner products back into their caps.

    Each violated pair is rotated apart in its own plane to sit exactly on its cap;
    sweeps repeat until the residual is within feas_tol or the sweep budget runs out.

    Returns:
        Tuple of (repaired vectors, final residual)
    """
    vectors = np.array(vectors, dtype=float)
    n = vectors.shape[0]
    for sweep in range(REPAIR_SWEEPS):
        residual = _residual(vectors, caps)
        if residual <= feas_tol:
            return vectors, residual
        for i in range(n):
            for j in range(i + 1, n):
                inner = float(vectors[i] @ vectors[j])
                if abs(inner) - caps[i, j] > 0.5 * feas_tol:
                    target = math.copysign(max(caps[i, j] - 1e-13, 0.0), inner)
                    vectors[i], vectors[j] = _set_pair_inner(vectors[i], vectors[j], target)
        logger.debug("Repair sweep %d: residual %.3g", sweep, residual)
    return vectors, _residual(vectors, caps)


def _safe_handle(
    objective: BaseObjective, vectors: np.ndarray, start: np.ndarray | None = None
) -> tuple[np.ndarray, float]:
    """best_handle, retried without the start; (e_1, inf) marks the candidate unusable."""
    for candidate in (start, None) if start is not None else (None,):
        try:
            return objective.best_handle(vectors, start=candidate)
        except OptimizationError as e:
            logger.debug("Handle search failed: %s", e.message)
    fallback = np.zeros(vectors.shape[1])
    fallback[0] = 1.0
    return fallback, math.inf


class _LocalResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    vectors: np.ndarray
    handle: np.ndarray
    value: float
    residual: float
    converged: bool
    label: str


class _ConstraintSet:
    """Pair constraints of degree rho: equalities for zero caps, |G| <= cap otherwise."""

    def __init__(self, B: GramMatrix, rho: float):
        self.caps = B.caps(rho)
        n = B.size
        upper_i, upper_j = np.triu_indices(n, k=1)
        zero = self.caps[upper_i, upper_j] == 0
        binding = (~zero) & (self.caps[upper_i, upper_j] < 1.0)
        self.eq = (upper_i[zero], upper_j[zero])
        self.ineq = (upper_i[binding], upper_j[binding])
        self.ineq_caps = self.caps[self.ineq]

    def violation(self, G: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
        h = G[self.eq]
        g = np.abs(G[self.ineq]) - self.ineq_caps
        worst = max(
            float(np.max(np.abs(h))) if h.size else 0.0,
            float(np.max(g)) if g.size else 0.0,
        )
        return h, g, max(worst, 0.0)


class ThetaOptimizer:
    """
    Multi-start certified optimizer for the theta functions.

    Example:
        optimizer = ThetaOptimizer(OptimizerOptions(seed=7))
        certificate = optimizer.optimize_theta(B, rho=2.0)
    """

    def __init__(self, options: OptimizerOptions | None = None):
        self.options = options or OptimizerOptions()

    # ------------------------------------------------------------------ search

    def _local_search(
        self,
        objective: BaseObjective,
        constraints: _ConstraintSet,
        start: np.ndarray,
        label: str,
    ) -> _LocalResult:
        options = self.options
        n, d = start.shape
        f0, _ = _safe_handle(get_objective(ObjectiveKind.MINIMAX), start)
        U = _align_to_first_axis(start, f0)

        lam_eq = np.zeros(len(constraints.eq[0]))
        lam_in = np.zeros(len(constraints.ineq[0]))
        penalty = options.initial_penalty
        temperature = options.temperature_start
        iterations = 0
        converged = False
        previous_violation = math.inf
        previous_objective = math.inf

        def lagrangian(flat: np.ndarray) -> tuple[float, np.ndarray]:
            raw = flat.reshape(n, d)
            norms = np.linalg.norm(raw, axis=1)
            v = raw / norms[:, None]
            G = v @ v.T
            value, d_inner = objective.smoothed(v[:, 0], temperature)
            grad_v = np.zeros_like(v)
            grad_v[:, 0] = d_inner
            coeff = np.zeros((n, n))
            if lam_eq.size:
                h = G[constraints.eq]
                value += float(lam_eq @ h + 0.5 * penalty * h @ h)
                coeff[constraints.eq] = lam_eq + penalty * h
            if lam_in.size:
                inner = G[constraints.ineq]
                g = np.abs(inner) - constraints.ineq_caps
                shifted = np.maximum(0.0, g + lam_in / penalty)
                value += float(0.5 * penalty * (shifted @ shifted - (lam_in / penalty) @ (lam_in / penalty)))
                coeff[constraints.ineq] = penalty * shifted * np.sign(inner)
            coeff = coeff + coeff.T
            grad_v += coeff @ v
            radial = np.sum(grad_v * v, axis=1)
            grad = (grad_v - radial[:, None] * v) / norms[:, None]
            return value, grad.ravel()

        for outer in range(options.outer_iterations):
            if objective.anneals:
                temperature = max(options.temperature_end, options.temperature_start * 0.25**outer)
            chunk_value = math.inf
            while iterations < options.max_iter:
                result = minimize(
                    lagrangian,
                    U.ravel(),
                    jac=True,
                    method="L-BFGS-B",
                    options={"maxiter": options.conv_window, "ftol": 1e-15, "gtol": 1e-11},
                )
                iterations += max(int(result.nit), 1)
                U = result.x.reshape(n, d)
                U = U / np.linalg.norm(U, axis=1, keepdims=True)
                if abs(chunk_value - result.fun) < options.conv_tol or result.nit < options.conv_window:
                    break
                chunk_value = result.fun

            G = U @ U.T
            h, g, violation = constraints.violation(G)
            if lam_eq.size:
                lam_eq = lam_eq + penalty * h
            if lam_in.size:
                lam_in = np.maximum(0.0, lam_in + penalty * g)
            if violation > 0.25 * previous_violation:
                penalty = min(penalty * 10.0, options.max_penalty)
            previous_violation = violation

            current = objective.value(U[:, 0])
            settled = not objective.anneals or temperature <= options.temperature_end
            if (
                settled
                and violation <= options.feas_tol
                and abs(current - previous_objective) < options.conv_tol
            ):
                converged = True
                break
            previous_objective = current
            if iterations >= options.max_iter:
                break

        vectors, residual = repair(U, constraints.caps, options.feas_tol)
        e1 = np.zeros(d)
        e1[0] = 1.0
        f, value = _safe_handle(objective, vectors, start=e1)
        logger.debug(
            "Start %s: value %.10g residual %.3g after %d iterations (converged=%s)",
            label, value, residual, iterations, converged,
        )
        return _LocalResult(
            vectors=vectors, handle=f, value=value, residual=residual, converged=converged, label=label
        )

    def _as_is(self, objective: BaseObjective, caps: np.ndarray, vectors: np.ndarray,
               handle: np.ndarray | None, label: str) -> _LocalResult:
        f, value = _safe_handle(objective, vectors, start=handle)
        return _LocalResult(
            vectors=np.array(vectors, dtype=float), handle=f, value=value,
            residual=_residual(vectors, caps), converged=True, label=label,
        )

    def _random_start(self, n: int, restart: int) -> np.ndarray:
        rng = np.random.default_rng(self.options.seed + restart)
        noise = rng.standard_normal((n, n))
        if restart % 2 == 1:
            # concentrated around a common axis, like an umbrella
            noise[:, 0] = np.abs(noise[:, 0]) + rng.uniform(0.5, 3.0)
        return noise / np.linalg.norm(noise, axis=1, keepdims=True)

    def _run(
        self,
        B: GramMatrix,
        rho: float,
        objective: BaseObjective,
        warm_start: ThetaCertificate | None,
    ) -> ThetaCertificate:
        if rho < 1:
            raise PreconditionError(f"rho must be >= 1, got {rho}", field="rho")
        options = self.options
        n = B.size
        constraints = _ConstraintSet(B, rho)

        fixed: list[_LocalResult] = [
            self._as_is(objective, constraints.caps, np.eye(n), None, "basis")
        ]
        starts: list[tuple[np.ndarray, str]] = []
        if warm_start is not None:
            if warm_start.representation.size != n:
                raise PreconditionError("Warm-start certificate has the wrong alphabet size", field="warm_start")
            vectors = np.array(warm_start.representation.vectors)
            fixed.append(self._as_is(objective, constraints.caps, vectors, warm_start.handle.f, "warm"))
            starts.append((vectors, "warm"))
        if is_nonneg_definite_at(B, rho):
            exact = np.array(exact_representation(B, rho).vectors)
            exact, _ = repair(exact, constraints.caps, options.feas_tol)
            fixed.append(self._as_is(objective, constraints.caps, exact, None, "exact"))
            starts.append((exact, "exact"))
        starts.extend((self._random_start(n, k), f"random-{k}") for k in range(options.restarts))

        searched = parallel_map(
            lambda item: self._local_search(objective, constraints, item[0], item[1]),
            starts,
            options.threads,
        )

        valid = [c for c in fixed + searched if c.residual <= options.feas_tol and np.isfinite(c.value)]
        if not valid:
            raise OptimizationError(
                f"No feasible representation found at rho={rho}; the basis start should always be feasible",
                field="rho",
            )
        best = min(valid, key=lambda c: c.value)
        logger.info(
            "%s theta at rho=%g: %.10g from start %s (%d starts)",
            objective.kind.value, rho, best.value, best.label, len(fixed) + len(searched),
        )
        handle = Handle.normalized(best.handle)
        representation = Representation(vectors=best.vectors, rho=rho, gram=B).oriented(handle)
        value = objective.evaluate(representation.vectors, handle.f)
        return ThetaCertificate(
            representation=representation,
            handle=handle,
            value=value,
            feasibility_residual=feasibility_residual(representation, B),
            objective_kind=objective.kind,
            weights=objective.weights,
            feas_tol=options.feas_tol,
            restarts_used=len(fixed) + len(searched),
            converged=best.converged,
            seed=options.seed,
        )

    # --------------------------------------------------------------- public API

    def optimize_theta(
        self, B: GramMatrix, rho: float, warm_start: ThetaCertificate | None = None
    ) -> ThetaCertificate:
        """
        Certified upper bound on theta(rho).

        Args:
            B: Channel Gram matrix
            rho: Degree, at least 1
            warm_start: Certificate whose pair is added as a candidate; a certificate at
                a smaller rho stays feasible, so the result is never worse than it

        Returns:
            ThetaCertificate: Valid certificate (residual <= feas_tol)
        """
        return self._run(B, rho, get_objective(ObjectiveKind.MINIMAX), warm_start)

    def optimize_theta_weighted(
        self,
        B: GramMatrix,
        rho: float,
        Q: Composition,
        warm_start: ThetaCertificate | None = None,
    ) -> ThetaCertificate:
        """
        Certified upper bound on theta(rho, Q).

        Warm-starting from a theta(rho) certificate yields a value no larger than that
        certificate's, the numeric form of theta(rho, Q) <= theta(rho).
        """
        if Q.size != B.size:
            raise PreconditionError(f"Q has {Q.size} entries, expected {B.size}", field="Q")
        return self._run(B, rho, get_objective(ObjectiveKind.WEIGHTED, Q.P), warm_start)

    def theta_PV(
        self,
        B: GramMatrix,
        rho: float,
        P: Composition,
        V: ConditionalType,
        cache: dict | None = None,
        warm_starts: Sequence[ThetaCertificate | None] | None = None,
    ) -> tuple[float, tuple[ThetaCertificate | None, ...]]:
        """
        theta(rho, P, V) = sum_x P(x) theta(rho, V(.|x)).

        One weighted subproblem per input in the support of P; inputs with P(x) = 0
        contribute nothing and get None in place of a certificate. Identical rows share
        one subproblem.

        Args:
            cache: Optional memo of weighted certificates keyed by (rho, row bytes),
                shared across calls by the V-search
            warm_starts: Optional per-input certificates (for instance those of a
                neighbouring V) used to warm-start the subproblems still to solve

        Returns:
            Tuple of (value, per-input certificates)
        """
        if P.size != B.size or V.size != B.size:
            raise PreconditionError("P, V and B must share the input alphabet", field="V")
        memo = cache if cache is not None else {}
        support = [int(x) for x in P.support]
        keys = {x: (float(rho), V.V[x].tobytes()) for x in support}
        pending = list(dict.fromkeys(key for key in keys.values() if key not in memo))
        rows = {keys[x]: V.V[x] for x in support}
        warm: dict = {}
        if warm_starts is not None:
            for x in support:
                if warm_starts[x] is not None:
                    warm.setdefault(keys[x], warm_starts[x])
        solved = parallel_map(
            lambda key: self.optimize_theta_weighted(B, rho, Composition(P=rows[key]), warm.get(key)),
            pending,
            self.options.threads,
        )
        memo.update(zip(pending, solved))

        certificates = tuple(memo[keys[x]] if x in keys else None for x in range(B.size))
        values = [memo[keys[x]].value for x in support]
        if len(set(values)) == 1:
            value = values[0]
        else:
            value = math.fsum(P.P[x] * memo[keys[x]].value for x in support)
        return value, certificates


# ============================================================================
# Module-level convenience functions
# ============================================================================


def optimize_theta(
    B: GramMatrix,
    rho: float,
    options: OptimizerOptions | None = None,
    warm_start: ThetaCertificate | None = None,
) -> ThetaCertificate:
    """Shortcut for ThetaOptimizer(options).optimize_theta()."""
    return ThetaOptimizer(options).optimize_theta(B, rho, warm_start)


def optimize_theta_weighted(
    B: GramMatrix,
    rho: float,
    Q: Composition,
    options: OptimizerOptions | None = None,
    warm_start: ThetaCertificate | None = None,
) -> ThetaCertificate:
    """Shortcut for ThetaOptimizer(options).optimize_theta_weighted()."""
    return ThetaOptimizer(options).optimize_theta_weighted(B, rho, Q, warm_start)


def theta_PV(
    B: GramMatrix,
    rho: float,
    P: Composition,
    V: ConditionalType,
    options: OptimizerOptions | None = None,
) -> tuple[float, tuple[ThetaCertificate | None, ...]]:
    """Shortcut for ThetaOptimizer(options).theta_PV()."""
    return ThetaOptimizer(options).theta_PV(B, rho, P, V)
