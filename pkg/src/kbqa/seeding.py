"""Deterministic sub-seed derivation.

All randomness in a run flows from one integer seed.  Components draw
from streams derived here so that adding a consumer never perturbs the
draws of another.
"""

import zlib

import numpy as np

__all__ = ["sub_seed", "rng_for"]


def sub_seed(seed: int, stream: str) -> int:
    """Derive a stable 32-bit seed for a named stream."""
    return (seed & 0xFFFFFFFF) ^ zlib.crc32(stream.encode("utf-8"))


def rng_for(seed: int, stream: str) -> np.random.Generator:
    return np.random.default_rng(sub_seed(seed, stream))
