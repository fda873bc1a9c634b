"""Counter-based random substreams.

Stream ``i`` of seed ``s`` is a Philox generator keyed by the 128-bit pair
``(s, i)``. Any worker can rebuild the stream for trial ``i`` without touching
the others, so parallel and serial runs draw identical numbers.
"""

import numpy as np

U64 = (1 << 64) - 1


def substream(seed: int, index: int = 0) -> np.random.Generator:
    if not 0 <= seed <= U64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    key = np.array([seed, index & U64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(seed: int, *labels: int) -> int:
    """A child seed for a named sub-experiment; stable across runs."""
    ss = np.random.SeedSequence([int(seed), *[int(v) & U64 for v in labels]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
