"""
CLI Commands

One handler per subcommand. Handlers take a RunConfig, call the services, print the
result and return the exit code; errors from the library propagate to main(), which
maps them to exit codes.

Human output uses 6 significant digits in nats (or bits with --bits); CSV and
certificate files carry full precision in nats.
"""

import json
import logging
import math
from pathlib import Path

import numpy as np

from elias_theta.cli.types import Command, RunConfig, VerifySuite
from elias_theta.exceptions import PreconditionError
from elias_theta.models import Channel, Composition, ConditionalType, ThetaCertificate, VerificationReport
from elias_theta.services.binary_analytic import (
    binary_theta,
    elias_limit,
    rho_theta_limit,
    z_from_gram,
)
from elias_theta.services.channel_model import channel_gram
from elias_theta.services.channels import load_channel
from elias_theta.services.elias_bound import DEFAULT_RHO_GRID, EliasBoundService, format_curve_csv
from elias_theta.services.oracle import (
    check_closed_form_grid,
    check_lemma1,
    check_rowsum_eigenvalue,
    check_theorem1_exhaustive,
)
from elias_theta.services.theta_optimizer import ThetaOptimizer

logger = logging.getLogger(__name__)

LEMMA1_GRID = ((2, 2), (2, 4), (2, 8), (3, 2), (3, 4), (3, 8), (5, 2), (5, 4), (5, 8))
BINARY_LAMBDAS = (0.0, 0.05, 0.11, 0.25, 0.5)
BINARY_RHOS = (1.0, 10.0, 1e4)
RATE_POINTS = 12


class Display:
    """Formats information quantities in nats or bits."""

    def __init__(self, bits: bool):
        self.scale = 1.0 / math.log(2.0) if bits else 1.0
        self.unit = "bits" if bits else "nats"

    def __call__(self, value: float) -> str:
        return f"{value * self.scale:.6g}"


def _require_channel(config: RunConfig) -> Channel:
    if config.channel is None:
        raise PreconditionError(f"{config.command.value} needs --channel", field="channel")
    return load_channel(config.channel)


def _composition(config: RunConfig, size: int) -> Composition:
    if config.P is None:
        return Composition.uniform(size)
    if len(config.P) != size:
        raise PreconditionError(f"--P has {len(config.P)} entries, channel has {size} inputs", field="P")
    return Composition(P=config.P)


def _print_certificate(cert: ThetaCertificate, show: Display) -> None:
    print(f"rho        {cert.rho:.6g}")
    print(f"value      {show(cert.value)} {show.unit}")
    print(f"residual   {cert.feasibility_residual:.3g}")
    print(f"restarts   {cert.restarts_used}")
    print(f"converged  {'yes' if cert.converged else 'no'}")


def _write_certificate(cert: ThetaCertificate, out: str | None) -> None:
    if out is not None:
        Path(out).write_text(json.dumps(cert.to_json_dict(), indent=2))
        logger.info("Certificate written to %s", out)


def cmd_theta(config: RunConfig) -> int:
    """Certified upper bound on theta(rho)."""
    B = channel_gram(_require_channel(config))
    cert = ThetaOptimizer(config.optimizer_options()).optimize_theta(B, config.rho)
    _print_certificate(cert, Display(config.bits))
    _write_certificate(cert, config.out)
    return 0


def cmd_theta_weighted(config: RunConfig) -> int:
    """Certified upper bound on theta(rho, Q), Q from --P (uniform by default)."""
    B = channel_gram(_require_channel(config))
    Q = _composition(config, B.size)
    cert = ThetaOptimizer(config.optimizer_options()).optimize_theta_weighted(B, config.rho, Q)
    _print_certificate(cert, Display(config.bits))
    _write_certificate(cert, config.out)
    return 0


def cmd_bound_curve(config: RunConfig) -> int:
    """Envelope of the Elias-type bound over the rho grid, as CSV."""
    channel = _require_channel(config)
    P = _composition(config, channel.num_inputs)
    V = None if config.V is None else ConditionalType(V=config.V)
    if config.R_grid is None:
        top = float(-np.sum(P.P[P.P > 0] * np.log(P.P[P.P > 0])))
        R_grid = np.linspace(top / RATE_POINTS, top, RATE_POINTS).tolist()
    else:
        R_grid = config.R_grid
    service = EliasBoundService(channel, config.optimizer_options())
    curve = service.bound_curve(P, R_grid, tuple(config.rho_grid or DEFAULT_RHO_GRID), V=V)
    text = format_curve_csv(curve)
    if config.out is None:
        print(text, end="")
    else:
        Path(config.out).write_text(text)
        logger.info("Curve written to %s", config.out)
    return 0


def _report(report: VerificationReport) -> bool:
    status = "ok" if report.passed else "VIOLATED"
    print(f"{report.name}: {report.checked} checked, {len(report.violations)} violations [{status}]")
    print(json.dumps(report.summary(), default=float))
    return report.passed


def cmd_verify(config: RunConfig) -> int:
    """Run one oracle suite; exit 0 iff there are no violations."""
    if config.suite is None:
        raise PreconditionError("verify needs a suite", field="suite")
    reports: list[VerificationReport] = []
    if config.suite is VerifySuite.LEMMA1:
        grid = [(config.M, config.dim)] if config.M and config.dim else LEMMA1_GRID
        for index, (M, dim) in enumerate(grid):
            reports.append(check_lemma1(M, dim, config.trials, config.seed + index))
    elif config.suite is VerifySuite.ROWSUM:
        reports.append(check_rowsum_eigenvalue(config.trials, config.seed))
    elif config.suite is VerifySuite.CLOSEDFORM:
        reports.append(check_closed_form_grid(config.optimizer_options()))
    else:
        channel = _require_channel(config)
        if config.n is None or config.M is None:
            raise PreconditionError("theorem1 needs --n and --M", field="n")
        theta_value = config.theta if config.theta is not None else _theta_for(channel, config)
        reports.append(check_theorem1_exhaustive(
            channel, config.n, config.M, config.rho, theta_value, threads=config.threads
        ))
    passed = [_report(report) for report in reports]
    return 0 if all(passed) else 1


def _theta_for(channel: Channel, config: RunConfig) -> float:
    """Exact theta(rho) for binary channels with finite Z, a certified bound otherwise."""
    B = channel_gram(channel)
    if B.size == 2 and B.B[0, 1] > 0:
        return binary_theta(z_from_gram(float(B.B[0, 1])), config.rho, (0.5, 0.5))
    return ThetaOptimizer(config.optimizer_options()).optimize_theta(B, config.rho).value


def cmd_binary(config: RunConfig) -> int:
    """Closed-form table: theta(rho, Q), rho*theta, Elias limit and rate threshold per (lambda, rho)."""
    if config.Z is not None:
        Z = config.Z
    elif config.b01 is not None:
        Z = z_from_gram(config.b01)
    else:
        raise PreconditionError("binary needs --b01 or --Z", field="b01")
    show = Display(config.bits)
    rhos = config.rho_grid or BINARY_RHOS
    print(f"Z = {show(Z)} {show.unit}")
    print(f"{'lambda':>10} {'rho':>10} {'theta':>12} {'rho*theta':>12} {'elias':>12} {'threshold':>12}")
    for lam in config.lambdas or BINARY_LAMBDAS:
        Q = (1.0 - lam, lam)
        threshold, limit = elias_limit(min(lam, 1.0 - lam), Z)
        for rho in rhos:
            theta = binary_theta(Z, rho, Q)
            print(
                f"{lam:>10.6g} {rho:>10.6g} {show(theta):>12} {show(rho * theta):>12} "
                f"{show(limit):>12} {show(threshold):>12}"
            )
        logger.debug("lambda=%g: limit %.6g, 2 Q0 Q1 Z = %.6g", lam, limit, rho_theta_limit(Q, Z))
    return 0


COMMANDS = {
    Command.THETA: cmd_theta,
    Command.THETA_WEIGHTED: cmd_theta_weighted,
    Command.BOUND_CURVE: cmd_bound_curve,
    Command.VERIFY: cmd_verify,
    Command.BINARY: cmd_binary,
}
