"""
Tests for the Elias Bound Service

Tests:
- Finite Plotkin-type right-hand sides
- Bound points for fixed V, the product-type specialization and stationarity checks
- V-search along the mixture path, the rate-boundary bisection and the bounded refinement
- Envelopes over rate and rho grids (binary and pentagon), and their CSV form
"""

import math

import numpy as np
import pytest

from elias_theta.config import Settings
from elias_theta.exceptions import PreconditionError
from elias_theta.models import Channel, Composition, ConditionalType
from elias_theta.services import elias_bound
from elias_theta.services.binary_analytic import binary_theta, elias_curve, rho_theta_limit, z_from_gram
from elias_theta.services.elias_bound import (
    CSV_HEADER,
    EliasBoundService,
    blahut_limit,
    bound_point_marton,
    finite_plotkin_rhs,
    finite_plotkin_rhs_weak,
    format_curve_csv,
    write_curve_csv,
)
from elias_theta.services.theta_optimizer import OptimizerOptions, audit_certificate


class TestFinitePlotkin:
    """Tests for the finite-blocklength right-hand sides."""

    def test_worked_value(self):
        """Test (M e^{-n theta / rho} - 1) / (M - 1) for M=4, n=3, theta=-ln 0.8."""
        assert finite_plotkin_rhs(4, 3, -math.log(0.8), 1.0) == pytest.approx(0.349333, abs=1e-6)

    def test_weak_form_is_weaker(self):
        """Test the weak form never exceeds the strong one."""
        for M in (2, 3, 8):
            for n in (1, 3, 10):
                for rho in (1.0, 2.0, 5.0):
                    strong = finite_plotkin_rhs(M, n, 0.3, rho)
                    assert finite_plotkin_rhs_weak(M, n, 0.3, rho) <= strong + 1e-15

    def test_capped_at_one(self):
        """Test the bound on an inner product never exceeds 1."""
        assert finite_plotkin_rhs(5, 1, 0.0, 1.0) == 1.0


class TestBoundPoint:
    """Tests for bound_point and bound_point_marton."""

    def test_marton_binary_degree_one(self, bsc01, uniform2, exact_only_options):
        """Test the product type gives (theta(1), theta(1)) on BSC(0.1)."""
        point = EliasBoundService(bsc01, exact_only_options).bound_point_marton(1.0, uniform2)
        assert point.rate_threshold == pytest.approx(-math.log(0.8), abs=1e-6)
        assert point.distance_bound == pytest.approx(-math.log(0.8), abs=1e-6)
        assert point.mutual_info == pytest.approx(0.0, abs=1e-15)

    def test_identity_type(self, bsc01, uniform2, exact_only_options):
        """Test V = I gives threshold H(P) and a zero distance bound."""
        point = EliasBoundService(bsc01, exact_only_options).bound_point(
            2.0, uniform2, ConditionalType.identity(2)
        )
        assert point.rate_threshold == pytest.approx(math.log(2.0), abs=1e-9)
        assert point.distance_bound <= 1e-9

    def test_flip_type_matches_closed_form(self, bsc01, uniform2, exact_only_options):
        """Test the symmetric flip type on a binary channel against the closed form."""
        Z = z_from_gram(0.6)
        point = EliasBoundService(bsc01, exact_only_options).bound_point(
            10.0, uniform2, ConditionalType.symmetric_flip(2, 0.11)
        )
        assert point.theta_PV_value == pytest.approx(binary_theta(Z, 10.0, (0.89, 0.11)), abs=1e-4)
        assert point.rate_threshold == pytest.approx(point.mutual_info + point.theta_PV_value)
        assert len(point.certificates) == 2

    def test_non_stationary_rejected(self, bsc01, exact_only_options):
        """Test a V with PV != P raises and names the residual."""
        P = Composition(P=[0.3, 0.7])
        with pytest.raises(PreconditionError) as exc_info:
            EliasBoundService(bsc01, exact_only_options).bound_point(
                1.0, P, ConditionalType(V=[[0.0, 1.0], [1.0, 0.0]])
            )
        assert exc_info.value.field == "V"
        assert "0.4" in exc_info.value.message

    def test_rho_below_one(self, bsc01, uniform2, exact_only_options):
        """Test degrees below 1 are refused."""
        with pytest.raises(PreconditionError):
            EliasBoundService(bsc01, exact_only_options).bound_point_marton(0.5, uniform2)

    def test_point_mass_degenerate(self, bsc01, exact_only_options):
        """Test a point-mass composition is flagged as degenerate."""
        P = Composition(P=[1.0, 0.0])
        point = EliasBoundService(bsc01, exact_only_options).bound_point_marton(2.0, P)
        assert point.degenerate
        assert point.distance_bound <= 1e-10

    def test_product_type_matches_marton_on_random_channels(self, exact_only_options):
        """Test bound_point with V = 1 P^T reproduces bound_point_marton bit for bit."""
        rng = np.random.default_rng(11)
        for _ in range(5):
            size = int(rng.integers(2, 4))
            W = rng.dirichlet(np.ones(3), size=size)
            channel = Channel(W=W / W.sum(axis=1, keepdims=True))
            P = Composition(P=rng.dirichlet(np.ones(size)))
            fixed = EliasBoundService(channel, exact_only_options).bound_point(
                2.0, P, ConditionalType.product(P)
            )
            marton = bound_point_marton(channel, 2.0, P, exact_only_options)
            assert fixed.theta_PV_value == marton.theta_PV_value
            assert fixed.rate_threshold == marton.rate_threshold

    @pytest.mark.slow
    def test_marton_on_twenty_random_channels(self, fast_options):
        """Test Marton points on 20 random channels with up to five inputs carry audited certificates."""
        rng = np.random.default_rng(23)
        for _ in range(20):
            size = int(rng.integers(2, 6))
            W = rng.dirichlet(np.ones(int(rng.integers(2, 6))), size=size)
            channel = Channel(W=W / W.sum(axis=1, keepdims=True))
            P = Composition(P=rng.dirichlet(np.ones(size)))
            point = bound_point_marton(channel, 2.0, P, fast_options)
            entropy = -float(np.sum(P.P * np.log(P.P)))
            assert -1e-12 <= point.theta_PV_value <= entropy + 1e-9
            assert point.mutual_info == pytest.approx(0.0, abs=1e-12)
            assert point.distance_bound == pytest.approx(2.0 * point.theta_PV_value)
            for cert in point.certificates:
                if cert is not None:
                    assert audit_certificate(cert).passed


class TestBlahutLimit:
    """Tests for the large-rho limit of rho * theta(rho, Q)."""

    def test_binary(self, bsc01_gram):
        """Test the binary limit 2 Q0 Q1 Z."""
        Q = Composition(P=[0.7, 0.3])
        assert blahut_limit(bsc01_gram, Q) == pytest.approx(rho_theta_limit(Q, z_from_gram(0.6)))


class TestSearchV:
    """Tests for the V-search."""

    def test_no_admissible_type(self, bsc01, uniform2, exact_only_options):
        """Test a rate below every threshold on the path gives None."""
        assert EliasBoundService(bsc01, exact_only_options).search_V(1.0, uniform2, 0.1) is None

    def test_point_mass_skipped(self, bsc01, exact_only_options):
        """Test the search is skipped for point-mass compositions."""
        service = EliasBoundService(bsc01, exact_only_options)
        assert service.search_V(2.0, Composition(P=[0.0, 1.0]), 0.3) is None

    def test_rate_must_be_positive(self, bsc01, uniform2, exact_only_options):
        """Test R <= 0 is refused."""
        with pytest.raises(PreconditionError) as exc_info:
            EliasBoundService(bsc01, exact_only_options).search_V(1.0, uniform2, 0.0)
        assert exc_info.value.field == "R"

    def test_result_is_admissible_and_stationary(self, bsc01, uniform2, exact_only_options):
        """Test the returned point meets the rate condition and beats the product type."""
        service = EliasBoundService(bsc01, exact_only_options)
        point = service.search_V(2.0, uniform2, 0.5)
        assert point is not None
        assert point.rate_threshold < 0.5
        assert np.allclose(uniform2.P @ point.V.V, uniform2.P, atol=1e-9)
        assert point.distance_bound <= service.bound_point_marton(2.0, uniform2).distance_bound + 1e-12

    def test_search_reaches_rate_boundary(self, bsc01, uniform2, exact_only_options):
        """Test bisection along the path leaves almost no rate slack at rho = 10^4."""
        point = EliasBoundService(bsc01, exact_only_options).search_V(1e4, uniform2, 0.6)
        assert point is not None
        assert 0.6 - 1e-3 < point.rate_threshold < 0.6

    def test_refine_respects_budget(self, pentagon_channel, uniform5, exact_only_options, monkeypatch):
        """Test the transportation refinement stops after SEARCH_REFINE_BUDGET moves."""
        monkeypatch.setattr(elias_bound, "get_settings", lambda: Settings(SEARCH_REFINE_BUDGET=5))
        service = EliasBoundService(pentagon_channel, exact_only_options)
        start = service.bound_point_marton(1.0, uniform5)
        moves = []

        def evaluate(V, warm):
            moves.append(V)
            assert warm is start
            return start

        assert service._refine(start, uniform5, 10.0, evaluate) is start
        assert len(moves) == 5
        for V in moves:
            assert np.allclose(uniform5.P @ V.V, uniform5.P, atol=1e-12)

    @pytest.mark.slow
    def test_binary_large_rho_approaches_elias(self, bsc01, uniform2, exact_only_options):
        """Test the searched bound at rho = 10^4 is within 2% of the Elias bound at R = 0.4."""
        point = EliasBoundService(bsc01, exact_only_options).search_V(1e4, uniform2, 0.4)
        elias = elias_curve(0.4, z_from_gram(0.6))
        assert point is not None
        assert abs(point.distance_bound - elias) / elias <= 0.02


class TestBoundCurve:
    """Tests for envelopes and their CSV form."""

    def test_fixed_type_envelope(self, bsc01, uniform2, exact_only_options):
        """Test a fixed-V envelope is nonincreasing with +inf below every threshold."""
        service = EliasBoundService(bsc01, exact_only_options)
        V = ConditionalType.product(uniform2)
        curve = service.bound_curve(uniform2, [0.5, 0.1, 0.3], rho_grid=(1.0, 2.0), V=V)
        assert [point.R for point in curve.points] == [0.1, 0.3, 0.5]
        assert math.isinf(curve.points[0].distance_bound)
        assert curve.points[0].provenance is None
        finite = [point.distance_bound for point in curve.points[1:]]
        assert finite == sorted(finite, reverse=True)
        assert curve.points[1].provenance.rho in (1.0, 2.0)

    def test_csv_format(self, bsc01, uniform2, exact_only_options, tmp_path):
        """Test the CSV header, the inf row and the full-precision values."""
        service = EliasBoundService(bsc01, exact_only_options)
        curve = service.bound_curve(
            uniform2, [0.1, 0.5], rho_grid=(1.0,), V=ConditionalType.product(uniform2)
        )
        lines = format_curve_csv(curve).splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert lines[1] == "0.1,inf,,,,"
        fields = lines[2].split(",")
        assert float(fields[1]) == curve.points[1].distance_bound
        assert fields[3] == "0.5;0.5;0.5;0.5"

        path = tmp_path / "curve.csv"
        write_curve_csv(curve, path)
        assert path.read_text() == format_curve_csv(curve)

    def test_searched_envelope_small_grid(self, bsc01, uniform2, exact_only_options):
        """Test the searched envelope over a small grid is nonincreasing and admissible."""
        curve = EliasBoundService(bsc01, exact_only_options).bound_curve(uniform2, [0.3, 0.6], rho_grid=(2.0,))
        assert curve.points[1].distance_bound <= curve.points[0].distance_bound
        for point in curve.points:
            if point.provenance is not None:
                assert point.provenance.rate_threshold < point.R

    def test_empty_grid(self, bsc01, uniform2):
        """Test empty grids are refused."""
        with pytest.raises(PreconditionError):
            EliasBoundService(bsc01).bound_curve(uniform2, [])

    def test_bad_rho(self, bsc01, uniform2):
        """Test a rho below 1 in the grid is refused."""
        with pytest.raises(PreconditionError) as exc_info:
            EliasBoundService(bsc01).bound_curve(uniform2, [0.3], rho_grid=(0.5, 2.0))
        assert exc_info.value.field == "rho_grid"

    def test_point_mass(self, bsc01):
        """Test a point-mass composition is refused."""
        with pytest.raises(PreconditionError) as exc_info:
            EliasBoundService(bsc01).bound_curve(Composition(P=[1.0, 0.0]), [0.3])
        assert exc_info.value.field == "P"

    def test_pentagon_fixed_type_straddles_zero_error_rate(self, pentagon_channel, uniform5, fast_options):
        """Test the product-type envelope is infinite below ln sqrt 5 and finite above ln 5."""
        service = EliasBoundService(pentagon_channel, fast_options)
        curve = service.bound_curve(
            uniform5, [0.7, 1.7], rho_grid=(1.0, 10.0), V=ConditionalType.product(uniform5)
        )
        assert math.isinf(curve.points[0].distance_bound)
        assert math.isfinite(curve.points[1].distance_bound)
        source = curve.points[1].provenance
        assert 0.5 * math.log(5.0) - 1e-9 <= source.rate_threshold <= math.log(5.0) + 1e-9

    @pytest.mark.slow
    def test_pentagon_searched_curve(self, pentagon_channel, uniform5):
        """Test the searched envelope at rho = 10^4 is finite just above ln sqrt 5 and infinite below."""
        options = OptimizerOptions(seed=7, restarts=16, threads=1)
        curve = EliasBoundService(pentagon_channel, options).bound_curve(
            uniform5, [0.7, 0.9], rho_grid=(1e4,)
        )
        assert math.isinf(curve.points[0].distance_bound)
        assert math.isfinite(curve.points[1].distance_bound)
        assert 0.5 * math.log(5.0) - 1e-9 <= curve.points[1].provenance.rate_threshold < 0.9

    @pytest.mark.slow
    def test_binary_envelope_tracks_elias(self, bsc01, uniform2, exact_only_options):
        """Test the envelope at rho = 10^4 stays within 2% of the Elias curve."""
        Z = z_from_gram(0.6)
        curve = EliasBoundService(bsc01, exact_only_options).bound_curve(
            uniform2, [0.2, 0.4, 0.6], rho_grid=(1e4,)
        )
        for point in curve.points:
            elias = elias_curve(point.R, Z)
            assert abs(point.distance_bound - elias) / elias <= 0.02
