"""
Command-line front end: RunConfig validation and subcommand handlers.
"""

from elias_theta.cli.commands import COMMANDS
from elias_theta.cli.types import Command, RunConfig, VerifySuite

__all__ = ["COMMANDS", "Command", "RunConfig", "VerifySuite"]
