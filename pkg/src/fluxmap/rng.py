"""Seeded random-number streams.

All randomness in the package flows through `substream`, which derives an
independent generator from a master seed and an integer path (e.g. one
stream per LHS dimension, per search repeat, per redraw attempt).  Streams
are keyed, not sequential, so results never depend on scheduling order.
Philox is counter-based, which keeps replay cheap and exact.
"""

from __future__ import annotations

import numpy as np


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Return a generator for the stream identified by (master_seed, *path).

    The same arguments always yield a bitwise-identical stream, and
    distinct paths yield statistically independent streams.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(path))
    return np.random.Generator(np.random.Philox(ss))
