"""
Pytest Configuration and Fixtures

This module provides shared fixtures for all tests:
- Built-in channels (BSC(0.1), the pentagon, noiseless channels) and their Gram matrices
- Optimizer options sized for fast tests
- A channel JSON file written to a temporary directory

Optimizer-heavy acceptance runs are marked ``slow``; deselect them with ``-m "not slow"``.
"""

import json
import math

import pytest

from elias_theta.models import Channel, Composition, GramMatrix
from elias_theta.services.channel_model import channel_gram
from elias_theta.services.channels import bsc, identity, pentagon
from elias_theta.services.theta_optimizer import OptimizerOptions

SEED = 7

# BSC(0.1): B01 = 2 sqrt(0.1 * 0.9) = 0.6
BSC_B01 = 0.6
BSC_Z = -math.log(BSC_B01)


@pytest.fixture
def bsc01() -> Channel:
    """Binary symmetric channel with crossover 0.1."""
    return bsc(0.1)


@pytest.fixture
def bsc01_gram(bsc01) -> GramMatrix:
    """Gram matrix of BSC(0.1)."""
    return channel_gram(bsc01)


@pytest.fixture
def pentagon_channel() -> Channel:
    """Noisy-typewriter channel on 5 inputs."""
    return pentagon()


@pytest.fixture
def pentagon_gram(pentagon_channel) -> GramMatrix:
    """Gram matrix of the pentagon: 1/2 between neighbours, 0 otherwise."""
    return channel_gram(pentagon_channel)


@pytest.fixture
def noiseless3_gram() -> GramMatrix:
    """Identity Gram matrix on 3 inputs."""
    return channel_gram(identity(3))


@pytest.fixture
def uniform2() -> Composition:
    """Uniform composition on a binary alphabet."""
    return Composition.uniform(2)


@pytest.fixture
def fast_options() -> OptimizerOptions:
    """Two random restarts, fixed seed, single thread."""
    return OptimizerOptions(seed=SEED, restarts=2, threads=1)


@pytest.fixture
def exact_only_options() -> OptimizerOptions:
    """
    No random restarts.

    Only the deterministic candidates run (basis, exact factorization and a
    local search from it), which suffices for binary channels.
    """
    return OptimizerOptions(seed=SEED, restarts=0, threads=1)


@pytest.fixture
def channel_file(tmp_path):
    """Z-channel written as a channel JSON document."""
    path = tmp_path / "z_channel.json"
    path.write_text(json.dumps({
        "W": [[1.0, 0.0], [0.3, 0.7]],
        "input_labels": ["0", "1"],
        "output_labels": ["0", "1"],
    }))
    return path


@pytest.fixture
def uniform5() -> Composition:
    """Uniform composition on the pentagon's five inputs."""
    return Composition.uniform(5)
