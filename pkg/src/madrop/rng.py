"""Named random substreams derived from a single experiment seed.

Every stochastic component draws from its own generator, keyed by a
stable name, so any part of an experiment can be reproduced in isolation
and results do not depend on scheduling order.
"""

from __future__ import annotations

import hashlib

import numpy as np


def substream(seed: int, name: str) -> np.random.Generator:
    """Generator for the given (seed, name) pair; stable across runs."""
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    key = tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def derive_seed(seed: int, name: str) -> int:
    """Stable child seed for components that need an integer seed."""
    digest = hashlib.sha256(f"{seed}/{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1
