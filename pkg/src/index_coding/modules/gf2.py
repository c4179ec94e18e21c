"""GF(2) linear algebra on int bitset rows, with optional payloads carried along."""
from __future__ import annotations

from typing import Iterable

import numpy as np


def mask_of(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        mask ^= 1 << i
    return mask


def gf2_rank(rows: list[int]) -> int:
    basis = GF2Basis()
    for row in rows:
        basis.add(row)
    return basis.rank


def gf2_is_in_rowspan(vec: int, rows: list[int]) -> bool:
    basis = GF2Basis()
    for row in rows:
        basis.add(row)
    return basis.in_span(vec)


class GF2Basis:
    """Echelon basis keyed by leading bit.

    Each row may carry a payload (a numpy bit array); reduction XORs payloads
    alongside the coefficient masks, so reducing a target to zero also yields
    the XOR of the payloads that spell it.
    """

    def __init__(self):
        self._rows: dict[int, tuple[int, np.ndarray | None]] = {}

    @property
    def rank(self) -> int:
        return len(self._rows)

    def reduce(self, mask: int, payload: np.ndarray | None = None) -> tuple[int, np.ndarray | None]:
        while mask:
            lead = mask.bit_length() - 1
            row = self._rows.get(lead)
            if row is None:
                break
            row_mask, row_payload = row
            mask ^= row_mask
            if payload is not None and row_payload is not None:
                payload = np.bitwise_xor(payload, row_payload)
        return mask, payload

    def add(self, mask: int, payload: np.ndarray | None = None) -> bool:
        """Insert a row; returns False if it was already in the span."""
        while mask:
            mask, payload = self.reduce(mask, payload)
            if not mask:
                return False
            lead = mask.bit_length() - 1
            if lead not in self._rows:
                self._rows[lead] = (mask, payload)
                return True
        return False

    def in_span(self, mask: int) -> bool:
        return self.reduce(mask)[0] == 0

    def solve(self, mask: int, zero: np.ndarray) -> np.ndarray | None:
        """Payload of the target row if it lies in the span, else None."""
        residual, payload = self.reduce(mask, zero.copy())
        return payload if residual == 0 else None
