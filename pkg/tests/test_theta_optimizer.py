"""
Tests for the Theta Optimizer Service

Tests:
- Feasibility residuals and values of fixed representations
- Certificate audits (recomputation from stored vectors and handle)
- optimize_theta and optimize_theta_weighted against closed forms
- Determinism, warm starts, monotonicity in rho and chaining
- theta(rho, P, V) decomposition, memo and per-input warm starts
- Repair of infeasible configurations
"""

import math

import numpy as np
import pytest

from elias_theta.exceptions import PreconditionError
from elias_theta.models import (
    Composition,
    ConditionalType,
    GramMatrix,
    ObjectiveKind,
    Representation,
)
from elias_theta.services.binary_analytic import binary_theta, z_from_gram
from elias_theta.services.channel_model import zero_error_pairs
from elias_theta.services.oracle import cycle_umbrella_value
from elias_theta.services.theta_optimizer import (
    OptimizerOptions,
    ThetaOptimizer,
    audit_certificate,
    feasibility_residual,
    optimize_theta,
    parallel_map,
    repair,
    theta_PV,
    value_minimax,
    value_weighted,
)


def _binary_gram(b01: float) -> GramMatrix:
    return GramMatrix(B=[[1.0, b01], [b01, 1.0]])


class TestFixedRepresentation:
    """Tests for residuals and values of a given representation."""

    def test_basis_is_feasible(self, pentagon_gram):
        """Test the orthonormal basis satisfies every constraint."""
        rep = Representation(vectors=np.eye(5), rho=3.0, gram=pentagon_gram)
        assert feasibility_residual(rep, pentagon_gram) == 0.0

    def test_parallel_vectors_violate_zero_pairs(self, pentagon_gram):
        """Test identical vectors violate the orthogonality of zero-error pairs by 1."""
        vectors = np.tile([1.0, 0.0, 0.0, 0.0, 0.0], (5, 1))
        rep = Representation(vectors=vectors, rho=1.0, gram=pentagon_gram)
        assert feasibility_residual(rep, pentagon_gram) == pytest.approx(1.0)

    def test_size_mismatch(self, pentagon_gram, bsc01_gram):
        """Test the residual needs matching alphabets."""
        rep = Representation(vectors=np.eye(2), rho=1.0, gram=bsc01_gram)
        with pytest.raises(PreconditionError):
            feasibility_residual(rep, pentagon_gram)

    def test_value_minimax_basis(self, noiseless3_gram):
        """Test the basis of a noiseless channel has value ln 3."""
        rep = Representation(vectors=np.eye(3), rho=1.0, gram=noiseless3_gram)
        handle, value = value_minimax(rep)
        assert value == pytest.approx(math.log(3.0), abs=1e-9)
        assert np.linalg.norm(handle.f) == pytest.approx(1.0)

    def test_value_weighted_basis(self, noiseless3_gram):
        """Test the weighted value of the basis is the entropy of Q."""
        rep = Representation(vectors=np.eye(3), rho=1.0, gram=noiseless3_gram)
        Q = Composition(P=[0.5, 0.25, 0.25])
        _, value = value_weighted(rep, Q)
        entropy = -sum(q * math.log(q) for q in (0.5, 0.25, 0.25))
        # f_x = sqrt(Q(x)) at the optimum gives sum Q ln 1/Q
        assert value == pytest.approx(entropy, abs=1e-9)

    def test_value_weighted_skewed_handle(self):
        """Test the handle of a skewed composition on a 2-D basis is sqrt(Q)."""
        rep = Representation(vectors=np.eye(2), rho=1.0, gram=_binary_gram(0.0))
        handle, value = value_weighted(rep, Composition(P=[0.9, 0.1]))
        assert np.allclose(handle.f, np.sqrt([0.9, 0.1]), atol=1e-10)
        assert value == pytest.approx(-(0.9 * math.log(0.9) + 0.1 * math.log(0.1)), abs=1e-12)

    def test_value_weighted_size_mismatch(self, noiseless3_gram):
        """Test Q must match the representation."""
        rep = Representation(vectors=np.eye(3), rho=1.0, gram=noiseless3_gram)
        with pytest.raises(PreconditionError) as exc_info:
            value_weighted(rep, Composition.uniform(2))
        assert exc_info.value.field == "Q"


class TestRepair:
    """Tests for the feasibility repair step."""

    def test_repair_pushes_pairs_into_caps(self, pentagon_gram):
        """Test a perturbed configuration is repaired below the tolerance."""
        rng = np.random.default_rng(3)
        vectors = np.eye(5) + 0.2 * rng.standard_normal((5, 5))
        vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
        repaired, residual = repair(vectors, pentagon_gram.caps(2.0), 1e-8)
        assert residual <= 1e-8
        assert np.allclose(np.linalg.norm(repaired, axis=1), 1.0)

    def test_repair_leaves_feasible_untouched(self, bsc01_gram):
        """Test feasible input is returned unchanged."""
        repaired, residual = repair(np.eye(2), bsc01_gram.caps(1.0), 1e-10)
        assert np.array_equal(repaired, np.eye(2))
        assert residual == 0.0


class TestOptimizeTheta:
    """Tests for optimize_theta."""

    def test_binary_matches_closed_form(self, bsc01_gram, exact_only_options):
        """Test theta(1) = -ln 0.8 for BSC(0.1)."""
        cert = ThetaOptimizer(exact_only_options).optimize_theta(bsc01_gram, 1.0)
        assert cert.value == pytest.approx(-math.log(0.8), abs=1e-7)
        assert cert.objective_kind is ObjectiveKind.MINIMAX
        assert cert.is_valid

    def test_binary_degree_ten(self, bsc01_gram, exact_only_options):
        """Test theta(10) agrees with the uniform closed form."""
        exact = binary_theta(z_from_gram(float(bsc01_gram.B[0, 1])), 10.0, (0.5, 0.5))
        cert = ThetaOptimizer(exact_only_options).optimize_theta(bsc01_gram, 10.0)
        assert cert.value == pytest.approx(exact, abs=1e-6)

    def test_noiseless_channel(self, noiseless3_gram, fast_options):
        """Test a noiseless channel gives ln |X|."""
        cert = optimize_theta(noiseless3_gram, 2.0, fast_options)
        assert cert.value == pytest.approx(math.log(3.0), abs=1e-6)

    def test_certificate_audit(self, pentagon_gram, fast_options):
        """Test a certificate's value and residual are reproduced from its own data."""
        cert = ThetaOptimizer(fast_options).optimize_theta(pentagon_gram, 2.0)
        audit = audit_certificate(cert, pentagon_gram)
        assert audit.passed
        assert audit.recomputed_value == pytest.approx(cert.value, abs=1e-10)

    def test_certificate_is_oriented(self, pentagon_gram, fast_options):
        """Test stored vectors all have nonnegative inner product with the handle."""
        cert = ThetaOptimizer(fast_options).optimize_theta(pentagon_gram, 2.0)
        assert np.all(cert.representation.vectors @ cert.handle.f >= 0)

    def test_zero_error_pairs_orthogonal(self, pentagon_gram, fast_options):
        """Test confusability-zero pairs stay orthogonal within the tolerance."""
        cert = ThetaOptimizer(fast_options).optimize_theta(pentagon_gram, 3.0)
        G = cert.representation.inner_products()
        for x, y in zero_error_pairs(pentagon_gram):
            assert abs(G[x, y]) <= fast_options.feas_tol

    def test_upper_bounded_by_ln_size(self, pentagon_gram, fast_options):
        """Test the basis candidate caps every result at ln |X|."""
        cert = ThetaOptimizer(fast_options).optimize_theta(pentagon_gram, 10.0)
        assert cert.value <= math.log(5.0) + 1e-12

    def test_deterministic(self, pentagon_gram, fast_options):
        """Test two runs with the same seed produce identical certificates."""
        first = ThetaOptimizer(fast_options).optimize_theta(pentagon_gram, 2.0)
        second = ThetaOptimizer(fast_options).optimize_theta(pentagon_gram, 2.0)
        assert first.value == second.value
        assert np.array_equal(first.representation.vectors, second.representation.vectors)

    def test_threads_do_not_change_result(self, pentagon_gram, fast_options):
        """Test the result is independent of the worker count."""
        threaded = fast_options.model_copy(update={"threads": 3})
        first = ThetaOptimizer(fast_options).optimize_theta(pentagon_gram, 2.0)
        second = ThetaOptimizer(threaded).optimize_theta(pentagon_gram, 2.0)
        assert first.value == second.value

    def test_warm_start_monotone_in_rho(self, pentagon_gram, fast_options):
        """Test a certificate at rho warm-starts rho' > rho to a value no larger."""
        optimizer = ThetaOptimizer(fast_options)
        low = optimizer.optimize_theta(pentagon_gram, 1.0)
        high = optimizer.optimize_theta(pentagon_gram, 2.0, warm_start=low)
        assert high.value <= low.value + 1e-12

    def test_rho_below_one(self, bsc01_gram):
        """Test degrees below 1 are refused."""
        with pytest.raises(PreconditionError) as exc_info:
            ThetaOptimizer().optimize_theta(bsc01_gram, 0.9)
        assert exc_info.value.field == "rho"

    def test_warm_start_wrong_size(self, bsc01_gram, pentagon_gram, fast_options):
        """Test a warm start over another alphabet is refused."""
        cert = ThetaOptimizer(fast_options).optimize_theta(bsc01_gram, 1.0)
        with pytest.raises(PreconditionError) as exc_info:
            ThetaOptimizer(fast_options).optimize_theta(pentagon_gram, 1.0, warm_start=cert)
        assert exc_info.value.field == "warm_start"

    @pytest.mark.slow
    def test_pentagon_large_rho_approaches_umbrella(self, pentagon_gram):
        """Test theta(10^6) of the pentagon is within 1e-2 of ln sqrt 5."""
        cert = ThetaOptimizer(OptimizerOptions(seed=7)).optimize_theta(pentagon_gram, 1e6)
        assert cert.is_valid
        assert cert.value == pytest.approx(cycle_umbrella_value(5), abs=1e-2)


class TestOptimizeThetaWeighted:
    """Tests for optimize_theta_weighted."""

    @pytest.mark.parametrize("rho", [1.0, 2.0, 10.0])
    @pytest.mark.parametrize("Q", [(0.5, 0.5), (0.7, 0.3)])
    def test_binary_matches_closed_form(self, exact_only_options, rho, Q):
        """Test agreement with the binary closed form."""
        B = _binary_gram(0.6)
        exact = binary_theta(z_from_gram(0.6), rho, Q)
        cert = ThetaOptimizer(exact_only_options).optimize_theta_weighted(B, rho, Composition(P=list(Q)))
        assert cert.value == pytest.approx(exact, abs=1e-4)
        assert cert.objective_kind is ObjectiveKind.WEIGHTED
        assert cert.weights.tolist() == list(Q)

    def test_point_mass_is_zero(self, pentagon_gram, fast_options):
        """Test theta(rho, delta_x) = 0."""
        Q = Composition(P=[0.0, 0.0, 1.0, 0.0, 0.0])
        cert = ThetaOptimizer(fast_options).optimize_theta_weighted(pentagon_gram, 3.0, Q)
        assert cert.value <= 1e-10

    def test_chaining_below_minimax(self, pentagon_gram, fast_options):
        """Test warm-starting from a theta(rho) certificate gives a value no larger."""
        optimizer = ThetaOptimizer(fast_options)
        minimax = optimizer.optimize_theta(pentagon_gram, 2.0)
        weighted = optimizer.optimize_theta_weighted(
            pentagon_gram, 2.0, Composition.uniform(5), warm_start=minimax
        )
        assert weighted.value <= minimax.value + 1e-9

    def test_weighted_audit(self, pentagon_gram, fast_options):
        """Test weighted certificates pass the audit."""
        Q = Composition(P=[0.4, 0.3, 0.1, 0.1, 0.1])
        cert = ThetaOptimizer(fast_options).optimize_theta_weighted(pentagon_gram, 2.0, Q)
        assert audit_certificate(cert).passed

    def test_size_mismatch(self, pentagon_gram):
        """Test Q must match the alphabet."""
        with pytest.raises(PreconditionError):
            ThetaOptimizer().optimize_theta_weighted(pentagon_gram, 1.0, Composition.uniform(2))


class TestThetaPV:
    """Tests for theta(rho, P, V)."""

    def test_product_type_equals_weighted(self, bsc01_gram, exact_only_options):
        """Test V(x'|x) = P(x') reproduces theta(rho, P) bit for bit."""
        P = Composition(P=[0.7, 0.3])
        optimizer = ThetaOptimizer(exact_only_options)
        value, certificates = optimizer.theta_PV(bsc01_gram, 2.0, P, ConditionalType.product(P))
        weighted = ThetaOptimizer(exact_only_options).optimize_theta_weighted(bsc01_gram, 2.0, P)
        assert value == weighted.value
        assert certificates[0] is certificates[1]

    def test_identity_type_is_zero(self, pentagon_gram, exact_only_options):
        """Test V = I gives theta(rho, P, I) = 0."""
        value, _ = theta_PV(
            pentagon_gram, 2.0, Composition.uniform(5), ConditionalType.identity(5), exact_only_options
        )
        assert value <= 1e-10

    def test_zero_probability_inputs_skipped(self, noiseless3_gram, exact_only_options):
        """Test inputs outside the support of P get no certificate."""
        P = Composition(P=[0.5, 0.5, 0.0])
        _, certificates = ThetaOptimizer(exact_only_options).theta_PV(
            noiseless3_gram, 1.0, P, ConditionalType.symmetric_flip(3, 0.2)
        )
        assert certificates[2] is None
        assert certificates[0] is not None

    def test_binary_flip_matches_closed_form(self, bsc01_gram, exact_only_options):
        """Test the symmetric flip type reduces to one binary closed form."""
        Z = z_from_gram(float(bsc01_gram.B[0, 1]))
        value, _ = ThetaOptimizer(exact_only_options).theta_PV(
            bsc01_gram, 5.0, Composition.uniform(2), ConditionalType.symmetric_flip(2, 0.11)
        )
        assert value == pytest.approx(binary_theta(Z, 5.0, (0.89, 0.11)), abs=1e-4)

    def test_cache_reused(self, bsc01_gram, exact_only_options):
        """Test a shared cache returns the stored certificates."""
        cache: dict = {}
        optimizer = ThetaOptimizer(exact_only_options)
        P = Composition.uniform(2)
        V = ConditionalType.symmetric_flip(2, 0.2)
        _, first = optimizer.theta_PV(bsc01_gram, 3.0, P, V, cache=cache)
        _, second = optimizer.theta_PV(bsc01_gram, 3.0, P, V, cache=cache)
        assert first[0] is second[0]
        assert len(cache) == 2

    def test_warm_starts_used(self, pentagon_gram, uniform5, fast_options, exact_only_options):
        """Test per-input warm starts carry a searched certificate into a restart-free solve."""
        searched = ThetaOptimizer(fast_options).optimize_theta_weighted(pentagon_gram, 10.0, uniform5)
        V = ConditionalType.product(uniform5)
        optimizer = ThetaOptimizer(exact_only_options)
        cold, _ = optimizer.theta_PV(pentagon_gram, 10.0, uniform5, V)
        warm, certificates = optimizer.theta_PV(
            pentagon_gram, 10.0, uniform5, V, warm_starts=[searched] * 5
        )
        assert warm <= searched.value + 1e-12
        assert warm <= cold + 1e-12
        assert audit_certificate(certificates[0]).passed


class TestParallelMap:
    """Tests for the order-preserving map."""

    def test_order_preserved(self):
        """Test results come back in input order on a pool."""
        assert parallel_map(lambda x: x * x, range(10), threads=4) == [x * x for x in range(10)]

    def test_inline(self):
        """Test a single thread runs inline."""
        assert parallel_map(str, [1, 2], threads=1) == ["1", "2"]
