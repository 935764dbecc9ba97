"""Counter-based random streams for reproducible, order-independent Monte Carlo.

Each path gets its own Philox stream keyed by the master seed, with the
path index placed in the high words of the 256-bit counter.  Streams are
therefore separated by 2**128 blocks: a path would have to draw an absurd
amount of randomness before colliding with its neighbour, and the stream
for path ``i`` is identical whether paths run serially or in parallel.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, path_index: int = 0) -> np.random.Generator:
    """Return the dedicated generator for (master seed, path index).

    Identical arguments yield bit-identical draw sequences on every
    platform numpy supports.
    """
    if path_index < 0:
        raise ValueError("path_index must be nonnegative")
    bitgen = np.random.Philox(key=seed, counter=[0, 0, path_index, 0])
    return np.random.Generator(bitgen)
