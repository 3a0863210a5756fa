"""Reproducible counter-based random streams.

Every stochastic operation draws from a Philox generator keyed by
(seed, stream).  Distinct streams are statistically independent, so series
run in parallel stay bitwise reproducible regardless of execution order.
"""

from __future__ import annotations

import numpy as np


def stream_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Generator for the given 64-bit seed and stream index."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))
