"""First-phase simplex for {x >= 0 : A x = b} in exact rational arithmetic."""
from __future__ import annotations

import logging
from fractions import Fraction
from numbers import Rational
from typing import Sequence

logger = logging.getLogger(__name__)


def to_fraction(value) -> Fraction:
    if isinstance(value, Rational):
        return Fraction(value)
    return Fraction(str(float(value)))


class PhaseOneTableau:
    """Dense tableau with one artificial variable per row; Bland's rule for entering and leaving."""

    def __init__(self, rows: Sequence[Sequence], rhs: Sequence):
        zero, one = Fraction(0), Fraction(1)
        self.m, self.n = len(rows), len(rows[0]) if rows else 0
        self.A = []
        self.b = []
        for i, (row, value) in enumerate(zip(rows, rhs)):
            row = [to_fraction(v) for v in row]
            value = to_fraction(value)
            if value < 0:
                row, value = [-v for v in row], -value
            self.A.append(row + [one if k == i else zero for k in range(self.m)])
            self.b.append(value)
        self.basis = [self.n + i for i in range(self.m)]
        self.cost = [sum((self.A[i][j] for i in range(self.m)), zero) for j in range(self.n)] + [zero] * self.m
        self.value = sum(self.b, zero)
        self.pivots = 0

    def pivot(self, i: int, j: int) -> None:
        row = self.A[i]
        piv = row[j]
        d = self.cost[j]
        self.value -= d * self.b[i] / piv
        self.cost = [c - d * a / piv for c, a in zip(self.cost, row)]
        self.A[i] = [a / piv for a in row]
        self.b[i] /= piv
        for k in range(self.m):
            f = self.A[k][j]
            if k != i and f != 0:
                self.A[k] = [a - f * r for a, r in zip(self.A[k], self.A[i])]
                self.b[k] -= f * self.b[i]
        self.basis[i] = j
        self.pivots += 1

    def step(self) -> bool:
        entering = next((j for j in range(self.n) if self.cost[j] > 0), None)
        if entering is None:
            return False
        candidates = [
            (self.b[i] / self.A[i][entering], self.basis[i], i)
            for i in range(self.m) if self.A[i][entering] > 0
        ]
        if not candidates:
            return False
        _, _, leaving = min(candidates)
        self.pivot(leaving, entering)
        return True

    def solve(self) -> list[Fraction] | None:
        while self.step():
            pass
        logger.debug(f"Simplex: первая фаза завершена за {self.pivots} поворотов, невязка {self.value}")
        if self.value > 0:
            return None
        x = [Fraction(0)] * self.n
        for i, var in enumerate(self.basis):
            if var < self.n:
                x[var] = self.b[i]
        return x


def find_feasible_point(rows: Sequence[Sequence], rhs: Sequence) -> list[Fraction] | None:
    """A point x >= 0 with rows @ x == rhs, or None if there is none."""
    if not rows:
        return []
    return PhaseOneTableau(rows, rhs).solve()
