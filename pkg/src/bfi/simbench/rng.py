"""Counter-based random streams.

Every draw is keyed by ``(seed, replicate, center, stream)``, so any
replicate can be generated in isolation, in any order and in any worker
process, with identical results.
"""

from __future__ import annotations

import numpy as np

COVARIATES = 0
OUTCOMES = 1


def stream_key(seed: int, rep: int, center: int, stream: int) -> np.ndarray:
    """128-bit Philox key derived from the four counters."""
    for v, what in ((seed, "seed"), (rep, "replicate"), (center, "center"), (stream, "stream")):
        if int(v) < 0:
            raise ValueError(f"{what} must be non-negative")
    ss = np.random.SeedSequence([int(seed), int(rep), int(center), int(stream)])
    return ss.generate_state(2, dtype=np.uint64)


def generator(seed: int, rep: int, center: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=stream_key(seed, rep, center, stream)))
