"""Seed derivation.

All randomness in a run flows from one root seed; each consumer gets
its own stream keyed by a stable name, so adding a consumer never
shifts the streams of the others.
"""

import hashlib

import numpy as np


def derive_seed(root_seed: int, name: str) -> int:
    """Derive a 63-bit seed for the consumer `name` from the root seed."""
    digest = hashlib.sha256(f"{root_seed}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & 0x7FFF_FFFF_FFFF_FFFF


def rng_for(root_seed: int, name: str) -> np.random.Generator:
    """Seeded generator for the consumer `name`."""
    return np.random.default_rng(derive_seed(root_seed, name))
