"""Seeded substreams for agents, replicas and auxiliary draws.

Every stream is a Philox counter-based generator keyed by a SeedSequence whose
spawn key encodes the stream's role. Streams for different (agent, replica)
pairs never overlap, so populations and ensembles can be evolved in any order
or in parallel and still reproduce bit for bit.
"""

from __future__ import annotations

import numpy as np

U64_MAX = 2**64 - 1

# first spawn-key word separates stream families
_AGENT = 0
_POPULATION = 1
_LYAPUNOV = 2
_INITIAL_SPREAD = 3


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed <= U64_MAX:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def _generator(seed: int, key: tuple[int, ...]) -> np.random.Generator:
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def agent_stream(seed: int, agent: int = 0, replica: int = 0) -> np.random.Generator:
    """Noise stream driving one agent in one replica."""
    return _generator(seed, (_AGENT, int(agent), int(replica)))


def population_stream(seed: int) -> np.random.Generator:
    """Stream used to draw per-agent savings propensities."""
    return _generator(seed, (_POPULATION,))


def lyapunov_stream(seed: int) -> np.random.Generator:
    return _generator(seed, (_LYAPUNOV,))


def spread_stream(seed: int) -> np.random.Generator:
    return _generator(seed, (_INITIAL_SPREAD,))
