"""Counter-based random streams for reproducible parallel Monte Carlo.

Every stochastic object in this package (trajectory, ensemble point,
encoding pair, ...) owns a private Philox stream derived from the master
seed and a tuple of integer subkeys. Streams are independent of worker
count and of the order in which tasks are executed, which is what makes
byte-identical sweep output possible.
"""

from __future__ import annotations

import numpy as np

__all__ = ["substream", "COINS", "BORN", "AUX", "ENCODING"]

# conventional purpose slots used as the first subkey after the grid index
COINS = 0      # Bernoulli control/chaos draws
BORN = 1       # measurement-outcome draws
AUX = 2        # rare-event draws (degenerate resets etc.)
ENCODING = 3   # per-configuration state preparation


def substream(seed: int, *key: int) -> np.random.Generator:
    """Return the Philox generator keyed by ``(seed, *key)``.

    The same (seed, key) tuple always yields the same stream, on any
    machine and under any process/thread layout.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(x) for x in key))
    return np.random.Generator(np.random.Philox(ss))
