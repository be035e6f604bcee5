"""Seeded random streams.

Every consumer of randomness asks for a stream by ``(seed, purpose, *index)``.
Streams are numpy ``PCG64`` bit generators keyed through ``SeedSequence``, so
one purpose never perturbs another and results do not depend on call order.
"""

import numpy as np

CIRCUIT = 0
SHOTS = 1
NOISE = 2
SHUFFLE = 3

_MASK64 = (1 << 64) - 1


def stream(seed, purpose, *index):
    """Return an independent ``Generator`` for ``(seed, purpose, *index)``."""
    seed = int(seed)
    if seed < 0:
        # SeedSequence rejects negative entropy; fold into the unsigned range
        seed &= _MASK64
    key = (int(purpose),) + tuple(int(i) for i in index)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))
