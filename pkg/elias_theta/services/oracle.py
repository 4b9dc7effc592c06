"""
Oracle Service

Brute-force and randomized checks that do not depend on the optimizer:

- exhaustive enumeration of small codes against the finite Plotkin-type inequality
- best codes by minimum Bhattacharyya distance at tiny blocklengths
- randomized instances of the spherical-cap lemma and of the row-sum eigenvalue bound
- the exponential-averaging Plotkin bound of a given code
- the value of the symmetric umbrella representation of the 5-cycle structure
- the optimizer-vs-closed-form grid for binary channels

Enumeration is split by the first codeword and the partitions run on worker threads;
reports are merged in partition order, so results do not depend on scheduling.
"""

import itertools
import logging
import math
from collections.abc import Iterator, Sequence

import numpy as np
from scipy.special import comb

from elias_theta.config import get_settings
from elias_theta.exceptions import EnumerationGuardError, PreconditionError
from elias_theta.models import Channel, Code, Composition, GramMatrix, VerificationReport
from elias_theta.services.binary_analytic import binary_theta, z_from_gram
from elias_theta.services.channel_model import bhattacharyya_matrix, channel_gram
from elias_theta.services.elias_bound import finite_plotkin_rhs
from elias_theta.services.theta_optimizer import OptimizerOptions, ThetaOptimizer, parallel_map

logger = logging.getLogger(__name__)

INEQUALITY_SLACK = 1e-12
RANDOM_SLACK = 1e-9
CLOSED_FORM_TOL = 1e-4
CLOSED_FORM_RHOS = (1.0, 2.0, 5.0, 10.0, 100.0)
CLOSED_FORM_QS = ((0.5, 0.5), (0.7, 0.3), (0.9, 0.1))
CLOSED_FORM_B01 = (0.2, 0.6, 0.9)


# ============================================================================
# Codes
# ============================================================================


def _pairwise_inner(words: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Matrix of prod_i B[x_{m,i}][x_{m',i}] for codeword index rows ``words``."""
    inner = np.ones((len(words), len(words)))
    for position in range(words.shape[1]):
        column = words[:, position]
        inner *= B[np.ix_(column, column)]
    return inner


def code_max_inner(code: Code, B: GramMatrix) -> float:
    """max over m != m' of prod_i B[x_{m,i}][x_{m',i}]; 0 as soon as one factor is 0."""
    if code.q != B.size:
        raise PreconditionError(f"Code alphabet {code.q} does not match B ({B.size})", field="code")
    inner = _pairwise_inner(np.array(code.codewords), B.B)
    np.fill_diagonal(inner, -np.inf)
    return float(max(np.max(inner), 0.0))


def code_min_distance(code: Code, B: GramMatrix) -> float:
    """Minimum Bhattacharyya distance sum_i d(x_{m,i}, x_{m',i}) over distinct pairs."""
    d = bhattacharyya_matrix(B)
    words = code.codewords
    return min(
        sum(d[a, b] for a, b in zip(words[i], words[j]))
        for i in range(len(words))
        for j in range(i + 1, len(words))
    )


def _words(q: int, n: int, composition: Composition | None) -> list[tuple[int, ...]]:
    words = list(itertools.product(range(q), repeat=n))
    if composition is None:
        return words
    counts = composition.P * n
    if not np.allclose(counts, np.round(counts), atol=1e-9):
        return []
    target = np.round(counts).astype(int)
    return [w for w in words if np.array_equal(np.bincount(w, minlength=q), target)]


def _guard(pool: int, M: int) -> int:
    count = int(comb(pool, M, exact=True))
    guard = get_settings().ENUMERATION_GUARD
    if count > guard:
        raise EnumerationGuardError(
            f"Refusing to enumerate C({pool}, {M}) = {count} codes (guard {guard})", count=count
        )
    return count


def _partitions(pool: int, M: int) -> Iterator[int]:
    """First-codeword indices that leave room for M - 1 later codewords."""
    return iter(range(pool - M + 1))


def _codes_from(first: int, pool: int, M: int) -> Iterator[tuple[int, ...]]:
    for rest in itertools.combinations(range(first + 1, pool), M - 1):
        yield (first, *rest)


def check_theorem1_exhaustive(
    channel: Channel, n: int, M: int, rho: float, theta_value: float, threads: int | None = None
) -> VerificationReport:
    """
    Check max <psi_m, psi_m'> >= finite_plotkin_rhs(M, n, theta_value, rho) on every code.

    ``theta_value`` must be exact or a certified upper bound on theta(rho).

    Raises:
        EnumerationGuardError: If C(|X|^n, M) exceeds ENUMERATION_GUARD
    """
    B = channel_gram(channel)
    words = _words(B.size, n, None)
    total = _guard(len(words), M)
    rhs = finite_plotkin_rhs(M, n, theta_value, rho)
    inner = _pairwise_inner(np.array(words), B.B)
    threads = threads or get_settings().THREADS

    def scan(first: int) -> tuple[list[dict], tuple[float, tuple[int, ...]] | None, int]:
        violations, tightest, checked = [], None, 0
        for indices in _codes_from(first, len(words), M):
            block = inner[np.ix_(indices, indices)].copy()
            np.fill_diagonal(block, -np.inf)
            value = float(max(np.max(block), 0.0))
            checked += 1
            slack = value - rhs
            if slack < -INEQUALITY_SLACK:
                violations.append({
                    "codewords": [list(words[i]) for i in indices], "max_inner": value, "rhs": rhs,
                })
            if tightest is None or slack < tightest[0]:
                tightest = (slack, indices)
        return violations, tightest, checked

    results = parallel_map(scan, _partitions(len(words), M), threads)
    violations = [v for part, _, _ in results for v in part]
    checked = sum(count for _, _, count in results)
    ranked = [t for _, t, _ in results if t is not None]
    tightest = min(ranked, key=lambda t: t[0]) if ranked else None
    logger.info("Exhaustive check n=%d M=%d rho=%g: %d codes, %d violations", n, M, rho, checked, len(violations))
    return VerificationReport(
        name="theorem1",
        checked=checked,
        violations=violations,
        tightest_instance=None if tightest is None else {
            "codewords": [list(words[i]) for i in tightest[1]],
            "slack": tightest[0],
            "rhs": rhs,
        },
        details={"n": n, "M": M, "rho": rho, "theta": theta_value, "codes": total},
    )


def best_min_distance(
    channel: Channel, n: int, M: int, composition: Composition | None = None, threads: int | None = None
) -> tuple[Code, float] | None:
    """
    Code minimizing code_max_inner (maximizing the minimum distance).

    Ties go to the lexicographically smallest codeword list. With a composition filter
    only constant-composition codes of that type are considered.

    Returns:
        Tuple of (code, max inner product), or None if no code matches the filter
    """
    B = channel_gram(channel)
    if composition is not None and composition.size != B.size:
        raise PreconditionError(f"Composition has {composition.size} entries, expected {B.size}", field="P")
    words = _words(B.size, n, composition)
    if len(words) < M:
        return None
    _guard(len(words), M)
    inner = _pairwise_inner(np.array(words), B.B)
    threads = threads or get_settings().THREADS

    def scan(first: int) -> tuple[float, tuple[int, ...]] | None:
        best = None
        for indices in _codes_from(first, len(words), M):
            block = inner[np.ix_(indices, indices)].copy()
            np.fill_diagonal(block, -np.inf)
            value = float(max(np.max(block), 0.0))
            # combinations come in lexicographic order, so strict improvement keeps the first
            if best is None or value < best[0]:
                best = (value, indices)
        return best

    results = [r for r in parallel_map(scan, _partitions(len(words), M), threads) if r is not None]
    value, indices = min(results, key=lambda r: r[0])
    code = Code(n=n, q=B.size, codewords=tuple(words[i] for i in indices))
    return code, value


def exp_plotkin_bound(code: Code, B: GramMatrix, rho: float) -> tuple[float, float]:
    """
    Exponential-averaging Plotkin bound of a code.

    Since min distance <= -rho ln of the average of e^{-d/rho} over the other
    codewords, the smallest such average over m gives

        d_min <= -rho ln max_m (1/(M-1)) sum_{m' != m} <psi_m, psi_m'>^{1/rho}

    Returns:
        Tuple of (bound, actual minimum distance), both in nats
    """
    if rho < 1:
        raise PreconditionError(f"rho must be >= 1, got {rho}", field="rho")
    inner = _pairwise_inner(np.array(code.codewords), B.B)
    tilted = np.where(inner > 0, np.power(np.clip(inner, 0.0, None), 1.0 / rho), 0.0)
    np.fill_diagonal(tilted, 0.0)
    average = float(np.max(tilted.sum(axis=1)) / (code.M - 1))
    bound = math.inf if average <= 0 else abs(-rho * math.log(average))
    return bound, code_min_distance(code, B)


# ============================================================================
# Randomized inequalities
# ============================================================================


def _cap_sample(rng: np.random.Generator, f: np.ndarray, width: float) -> np.ndarray:
    """Unit vector at angle at most ``width`` from f, with a random sign."""
    angle = rng.uniform(0.0, width)
    direction = rng.standard_normal(f.size)
    direction -= (direction @ f) * f
    direction /= np.linalg.norm(direction)
    v = math.cos(angle) * f + math.sin(angle) * direction
    return v if rng.random() < 0.5 else -v


def cap_inequality_sides(vectors: np.ndarray, f: np.ndarray) -> tuple[float, float, float]:
    """
    (c, max_{i != j} |<v_i, v_j>|, (M c - 1) / (M - 1)) for unit vectors v_i and handle f,
    with c = min_i <v_i, f>^2. Equality holds when every v_i equals f.
    """
    M = vectors.shape[0]
    c = float(np.min((vectors @ f) ** 2))
    gram = np.abs(vectors @ vectors.T)
    np.fill_diagonal(gram, -np.inf)
    return c, float(np.max(gram)), (M * c - 1.0) / (M - 1)


def check_lemma1(M: int, dim: int, trials: int, seed: int) -> VerificationReport:
    """
    Randomized spherical-cap inequality: if every |<v_i, f>|^2 >= c then
    max_{i != j} |<v_i, v_j>| >= (M c - 1) / (M - 1).

    Instances satisfy the premise by construction: the v_i are drawn inside a cap around
    f whose angular width is log-uniform in [1e-3, pi/2], and c is the smallest squared
    inner product realized.
    """
    if M < 2 or dim < 2:
        raise PreconditionError(f"Need M >= 2 and dim >= 2, got M={M}, dim={dim}", field="M")
    rng = np.random.default_rng(seed)
    violations: list[dict] = []
    tightest = None
    for trial in range(trials):
        f = rng.standard_normal(dim)
        f /= np.linalg.norm(f)
        width = math.exp(rng.uniform(math.log(1e-3), math.log(math.pi / 2)))
        vectors = np.array([_cap_sample(rng, f, width) for _ in range(M)])
        c, lhs, rhs = cap_inequality_sides(vectors, f)
        slack = lhs - rhs
        instance = {"trial": trial, "f": f.tolist(), "vectors": vectors.tolist(), "c": c, "lhs": lhs, "rhs": rhs}
        if slack < -RANDOM_SLACK:
            violations.append(instance)
        if tightest is None or slack < tightest["slack"]:
            tightest = {**instance, "slack": slack}
    return VerificationReport(
        name="lemma1",
        checked=trials,
        violations=violations,
        tightest_instance=tightest,
        details={"M": M, "dim": dim, "seed": seed},
    )


def check_rowsum_eigenvalue(trials: int, seed: int, max_size: int = 8) -> VerificationReport:
    """
    Randomized check of lambda_max(A) <= max_i sum_j |A_ij| for Gram matrices A = Phi^T Phi
    of unit columns.
    """
    rng = np.random.default_rng(seed)
    violations: list[dict] = []
    tightest = None
    for trial in range(trials):
        size = int(rng.integers(2, max_size + 1))
        dim = int(rng.integers(1, max_size + 1))
        phi = rng.standard_normal((dim, size))
        phi /= np.linalg.norm(phi, axis=0, keepdims=True)
        A = phi.T @ phi
        eigenvalue = float(np.linalg.eigvalsh(A)[-1])
        row_sum = float(np.max(np.abs(A).sum(axis=1)))
        slack = row_sum - eigenvalue
        if slack < -RANDOM_SLACK:
            violations.append({"trial": trial, "A": A.tolist(), "eigenvalue": eigenvalue, "row_sum": row_sum})
        if tightest is None or slack < tightest["slack"]:
            tightest = {"trial": trial, "eigenvalue": eigenvalue, "row_sum": row_sum, "slack": slack}
    return VerificationReport(
        name="rowsum",
        checked=trials,
        violations=violations,
        tightest_instance=tightest,
        details={"seed": seed, "max_size": max_size},
    )


# ============================================================================
# Independent value oracles
# ============================================================================


def cycle_umbrella_value(k: int) -> float:
    """
    Best value of a rotationally symmetric umbrella for the k-cycle structure.

    Vector x sits at polar angle t from the handle and azimuth x * step * 2 pi / k in R^3.
    For each step, t is solved from orthogonality of inputs two apart; the umbrella is
    kept if every non-adjacent pair is then orthogonal. Value = ln 1/cos^2 t, which is
    ln sqrt 5 for k = 5. Built from geometry alone, independent of the optimizer.

    Raises:
        PreconditionError: If k < 5 or no step yields a valid umbrella (k >= 7)
    """
    if k < 5:
        raise PreconditionError(f"k >= 5 required, got {k}", field="k")
    best = math.inf
    for step in range(1, k):
        phi = step * 2.0 * math.pi / k
        # cos^2 t + sin^2 t cos(2 phi) = 0  =>  cos^2 t = r / (1 + r), r = -cos(2 phi)
        r = -math.cos(2.0 * phi)
        if r <= 0:
            continue
        cos2 = r / (1.0 + r)
        inner = [cos2 + (1.0 - cos2) * math.cos(j * phi) for j in range(2, k - 1)]
        if max(abs(value) for value in inner) > 1e-12:
            continue
        best = min(best, -math.log(cos2))
        logger.debug("Umbrella for k=%d at step %d: cos^2 t = %.12g", k, step, cos2)
    if not math.isfinite(best):
        raise PreconditionError(f"No symmetric umbrella in R^3 for k={k}", field="k")
    return best


def check_closed_form_grid(
    options: OptimizerOptions | None = None,
    rhos: Sequence[float] = CLOSED_FORM_RHOS,
    Qs: Sequence[tuple[float, float]] = CLOSED_FORM_QS,
    b01s: Sequence[float] = CLOSED_FORM_B01,
    tol: float = CLOSED_FORM_TOL,
) -> VerificationReport:
    """Compare optimize_theta_weighted with binary_theta over a (rho, Q, b01) grid."""
    optimizer = ThetaOptimizer(options)
    violations: list[dict] = []
    tightest = None
    checked = 0
    for b01 in b01s:
        B = GramMatrix(B=[[1.0, b01], [b01, 1.0]])
        Z = z_from_gram(b01)
        for rho in rhos:
            for Q in Qs:
                exact = binary_theta(Z, rho, Q)
                certified = optimizer.optimize_theta_weighted(B, rho, Composition(P=list(Q))).value
                gap = abs(certified - exact)
                checked += 1
                instance = {"b01": b01, "rho": rho, "Q": list(Q), "exact": exact, "optimizer": certified, "gap": gap}
                if gap > tol:
                    violations.append(instance)
                if tightest is None or gap > tightest["gap"]:
                    tightest = instance
    return VerificationReport(
        name="closedform",
        checked=checked,
        violations=violations,
        tightest_instance=tightest,
        details={"tol": tol},
    )
