"""
Command-Line Entry Point

Builds the argument parser, configures logging and dispatches to the subcommand
handlers in elias_theta.cli.commands.

Subcommands:
- theta: certified upper bound on theta(rho)
- theta-weighted: certified upper bound on theta(rho, Q)
- bound-curve: Elias-type rate-distance envelope as CSV
- verify {lemma1|theorem1|rowsum|closedform}: oracle suites
- binary: closed-form table for binary channels

Exit codes: 0 success, 1 verification violation, 2 usage or input error,
3 numeric failure.
"""

import argparse
import logging
import sys

from pydantic import ValidationError

from elias_theta import __version__
from elias_theta.cli import COMMANDS, Command, RunConfig, VerifySuite
from elias_theta.config import get_settings
from elias_theta.exceptions import EliasThetaError, OptimizationError
from elias_theta.services.channels import get_supported_channels

EXIT_USAGE = 2
EXIT_NUMERIC = 3

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--channel",
        help=f"channel JSON file or built-in name ({', '.join(get_supported_channels())})",
    )
    common.add_argument("--seed", type=int, help=f"base seed (default {settings.SEED})")
    common.add_argument("--restarts", type=int, help=f"random restarts (default {settings.RESTARTS})")
    common.add_argument("--feas-tol", dest="feas_tol", type=float, help="certificate feasibility tolerance")
    common.add_argument("--threads", type=int, help="worker threads")
    common.add_argument("--out", help="output file (certificate JSON or curve CSV)")
    common.add_argument("--bits", action="store_true", default=None, help="display values in bits")
    common.add_argument("-v", "--verbose", action="count", default=0, help="more logging (-vv for debug)")

    parser = argparse.ArgumentParser(
        prog=settings.APP_NAME,
        description="Certified upper bounds on the minimum Bhattacharyya distance of codes.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    theta = subparsers.add_parser(Command.THETA.value, parents=[common], help="bound theta(rho)")
    theta.add_argument("--rho", type=float, default=1.0)

    weighted = subparsers.add_parser(
        Command.THETA_WEIGHTED.value, parents=[common], help="bound theta(rho, Q)"
    )
    weighted.add_argument("--rho", type=float, default=1.0)
    weighted.add_argument("--P", help="composition Q, comma-separated (default uniform)")

    curve = subparsers.add_parser(Command.BOUND_CURVE.value, parents=[common], help="rate-distance envelope")
    curve.add_argument("--P", help="composition, comma-separated (default uniform)")
    curve.add_argument("--V", help="fixed conditional type, rows separated by ';' (default: search)")
    curve.add_argument("--R-grid", dest="R_grid", help="rates in nats, comma-separated")
    curve.add_argument("--rho-grid", dest="rho_grid", help="degrees, comma-separated")

    verify = subparsers.add_parser(Command.VERIFY.value, parents=[common], help="run an oracle suite")
    verify.add_argument("suite", choices=[suite.value for suite in VerifySuite])
    verify.add_argument("--trials", type=int)
    verify.add_argument("--n", type=int, help="blocklength (theorem1)")
    verify.add_argument("--M", type=int, help="codewords (theorem1) or vectors (lemma1)")
    verify.add_argument("--dim", type=int, help="dimension (lemma1)")
    verify.add_argument("--rho", type=float, default=1.0)
    verify.add_argument("--theta", type=float, help="theta(rho) to test (default: computed)")

    binary = subparsers.add_parser(Command.BINARY.value, parents=[common], help="binary closed forms")
    binary.add_argument("--b01", type=float, help="Gram entry between the two inputs")
    binary.add_argument("--Z", type=float, help="Bhattacharyya distance, nats")
    binary.add_argument("--lambdas", help="flip probabilities, comma-separated")
    binary.add_argument("--rho-grid", dest="rho_grid", help="degrees, comma-separated")

    return parser


def configure_logging(verbosity: int) -> None:
    level = get_settings().LOG_LEVEL
    if verbosity == 1:
        level = "INFO"
    elif verbosity >= 2:
        level = "DEBUG"
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: list[str] | None = None) -> int:
    """
    Parse arguments, run one subcommand and return its exit code.

    Library errors are reported as ``error: <message>`` on stderr.
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    raw = {key: value for key, value in vars(args).items() if value is not None}
    raw.pop("verbose", None)
    try:
        config = RunConfig(**raw)
    except ValidationError as e:
        for error in e.errors():
            location = ".".join(str(part) for part in error["loc"])
            print(f"error: {location}: {error['msg']}", file=sys.stderr)
        return EXIT_USAGE

    try:
        return COMMANDS[config.command](config)
    except OptimizationError as e:
        logger.debug("Numeric failure", exc_info=True)
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_NUMERIC
    except EliasThetaError as e:
        field = f" ({e.field})" if e.field else ""
        print(f"error: {e.message}{field}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
