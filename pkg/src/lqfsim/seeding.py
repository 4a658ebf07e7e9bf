"""Deterministic seed derivation for parallel Monte Carlo replications.

Every replication draws from its own generator seeded as

    seed_i = master_seed XOR splitmix64(i)

where ``i`` is the replication's global index.  Seeds therefore depend only on
the replication index, never on scheduling, so aggregate results are identical
for any worker count.
"""

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
# splitmix64 constants (Steele, Lea & Flood's SplittableRandom finalizer).
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(value: int) -> int:
    """Scramble a 64-bit integer with the splitmix64 finalizer."""
    z = (int(value) + _GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def replication_seed(master_seed: int, index: int) -> int:
    """Seed for the replication with global index ``index``."""
    return (int(master_seed) & _MASK64) ^ splitmix64(index)


def replication_seeds(master_seed: int, count: int, start: int = 0) -> np.ndarray:
    """Vector of seeds for replications ``start .. start+count-1``."""
    idx = np.arange(start, start + count, dtype=np.uint64)
    z = (idx + np.uint64(_GAMMA)) & np.uint64(_MASK64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    z = z ^ (z >> np.uint64(31))
    return np.uint64(master_seed) ^ z
