import logging
from typing import Sequence

import numpy as np

from index_coding import config

logger = logging.getLogger(__name__)


class ArrivalStream:
    """Per-slot Bernoulli arrivals with one seeded substream per traffic type.

    Substream m is derived from the master seed and m alone, so adding types
    leaves the draws of the existing ones untouched. Draws are made in blocks.
    """

    def __init__(self, rates: Sequence[float], seed: int, block_slots: int = config.ARRIVAL_BLOCK_SLOTS):
        self.rates = np.asarray(rates, dtype=float)
        if np.any(self.rates < 0) or np.any(self.rates > 1):
            raise ValueError("arrival rates must lie in [0, 1]")
        self.block_slots = block_slots
        self._generators = [
            np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(m,)))
            for m in range(len(self.rates))
        ]
        self._bits = np.zeros((len(self.rates), 0), dtype=bool)
        self._offset = 0
        self.slot = 0

    def _refill(self) -> None:
        block = np.stack([g.random(self.block_slots) < rate for g, rate in zip(self._generators, self.rates)])
        self._bits = np.concatenate([self._bits[:, self._offset:], block], axis=1)
        self._offset = 0

    def take(self, slots: int) -> tuple[np.ndarray, list[list[int]]]:
        """Arrival counts per type over the next `slots` slots, and the slot index of every arrival."""
        while self._bits.shape[1] - self._offset < slots:
            self._refill()
        window = self._bits[:, self._offset:self._offset + slots]
        self._offset += slots
        counts = window.sum(axis=1).astype(np.int64)
        stamps: list[list[int]] = [[] for _ in range(len(self.rates))]
        for m, k in zip(*np.nonzero(window)):
            stamps[m].append(self.slot + int(k))
        self.slot += slots
        return counts, stamps
