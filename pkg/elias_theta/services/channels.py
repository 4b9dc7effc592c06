"""
Channel Loading

Resolves a channel argument to a Channel: either a built-in name or a JSON file.

Built-in channels:
- ``bsc:<p>``: binary symmetric channel with crossover p
- ``pentagon``: 5-input typewriter channel, W(x|x) = W(x+1 mod 5|x) = 1/2
- ``cycle:<k>``: k-input typewriter channel
- ``identity:<k>``: noiseless channel with k inputs
"""

import logging
from collections.abc import Callable
from pathlib import Path

import numpy as np

from elias_theta.exceptions import ChannelValidationError
from elias_theta.models import Channel

logger = logging.getLogger(__name__)


def bsc(p: float) -> Channel:
    if not 0.0 <= p <= 1.0:
        raise ChannelValidationError(f"Crossover must lie in [0, 1], got {p}", field="channel")
    return Channel(W=[[1.0 - p, p], [p, 1.0 - p]])


def cycle(k: int) -> Channel:
    if k < 3:
        raise ChannelValidationError(f"Cycle channels need k >= 3, got {k}", field="channel")
    W = 0.5 * (np.eye(k) + np.roll(np.eye(k), 1, axis=1))
    return Channel(W=W)


def pentagon() -> Channel:
    return cycle(5)


def identity(k: int) -> Channel:
    if k < 2:
        raise ChannelValidationError(f"Identity channels need k >= 2, got {k}", field="channel")
    return Channel(W=np.eye(k))


BUILTIN_CHANNELS: dict[str, tuple[Callable[..., Channel], Callable[[str], object] | None]] = {
    "bsc": (bsc, float),
    "cycle": (cycle, int),
    "identity": (identity, int),
    "pentagon": (pentagon, None),
}


def get_supported_channels() -> list[str]:
    return [name if parse is None else f"{name}:<{parse.__name__}>" for name, (_, parse) in BUILTIN_CHANNELS.items()]


def load_channel(spec: str) -> Channel:
    """
    Built-in channel by name, or a channel JSON file.

    Raises:
        ChannelValidationError: Unknown name, bad parameter, unreadable file or malformed channel
    """
    name, _, argument = spec.partition(":")
    if name in BUILTIN_CHANNELS and not Path(spec).exists():
        factory, parse = BUILTIN_CHANNELS[name]
        if parse is None:
            if argument:
                raise ChannelValidationError(f"Channel '{name}' takes no parameter", field="channel")
            return factory()
        if not argument:
            raise ChannelValidationError(f"Channel '{name}' needs a parameter: {name}:<value>", field="channel")
        try:
            value = parse(argument)
        except ValueError:
            raise ChannelValidationError(f"Bad parameter for '{name}': {argument!r}", field="channel") from None
        return factory(value)
    logger.debug("Loading channel file %s", spec)
    return Channel.from_json_file(spec)
