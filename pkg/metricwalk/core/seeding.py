"""
metricwalk Seeding

Every random stream is derived from one root seed and a stage name, so
adding or reordering stages never shifts another stage's stream.
"""

import zlib

import numpy as np


def derive_seed(root: int, name: str) -> int:
    """Deterministic 63-bit seed for the named stream under `root`."""
    if root < 0:
        raise ValueError(f"root seed must be >= 0, got {root}")
    ss = np.random.SeedSequence([int(root), zlib.crc32(name.encode("utf-8"))])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def stream(root: int, name: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root, name))
