"""Counter-based random substreams.

Every randomized protocol in this package takes a single 64-bit master
seed. Independent units of work (trials, sweep points, preparation cells)
each get their own substream: substream ``i`` of master seed ``s`` is the
Philox bit generator ``Philox(key=s)`` with its 256-bit counter advanced
to ``i * 2**128``. Substreams therefore never overlap, and results cannot
depend on the order in which trials are executed.
"""

from __future__ import annotations

import numpy as np

from .errors import PreconditionError

# Counter stride between substreams, in Philox 256-bit counter units.
STREAM_STRIDE = 2 ** 128


def substream(seed: int, index: int) -> np.random.Generator:
    """Generator for substream `index` of master seed `seed`."""
    return np.random.Generator(np.random.Philox(key=seed, counter=index * STREAM_STRIDE))


def as_generator(seed) -> np.random.Generator:
    """Accept either a master seed or an already-built Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(key=int(seed)))


class SubstreamSampler:
    """Fast repeated access to the substreams of one master seed.

    Equivalent to calling `substream(seed, i)` for each trial (a test pins
    bit-for-bit agreement) but reuses one bit generator, resetting its
    counter in place, which is roughly 7x cheaper per trial.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._bitgen = np.random.Philox(key=self.seed)
        self.generator = np.random.Generator(self._bitgen)
        self._state = self._bitgen.state

    def select(self, index: int) -> np.random.Generator:
        """Point the shared Generator at substream `index` and return it."""
        if not 0 <= index < 2 ** 64:
            raise PreconditionError(f"substream index {index} outside [0, 2**64)")
        counter = self._state["state"]["counter"]
        counter[...] = 0
        counter[2] = index          # counter word 2 holds multiples of 2**128
        self._state["buffer_pos"] = 4  # drop any buffered output
        self._bitgen.state = self._state
        return self.generator
