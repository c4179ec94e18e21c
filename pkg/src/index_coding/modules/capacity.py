"""Membership in the code-constrained capacity region and boundary search along a direction.

Rates lambda are feasible iff some distribution p over actions satisfies, for every type m,
lambda_m * sum_a p(a) T(a) <= sum_a p(a) mu_m(a).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from index_coding import config
from index_coding.modules.code_actions import ActionSet, CodingAction
from index_coding.modules.lp_simplex import find_feasible_point, to_fraction

logger = logging.getLogger(__name__)


class TemplateActionError(ValueError):
    pass


@dataclass(frozen=True)
class CapacityCertificate:
    probabilities: dict[int, Fraction | float]
    slack: tuple[Fraction | float, ...]
    exact: bool = True

    def is_sound(self, action_set: ActionSet, rates: Sequence[float], tolerance: float = config.LP_FLOAT_TOLERANCE) -> bool:
        """Re-check the certificate against the region inequalities."""
        by_id = {a.id: a for a in action_set.actions}
        total = sum(self.probabilities.values())
        if abs(float(total) - 1.0) > tolerance or any(p < 0 for p in self.probabilities.values()):
            return False
        frame = sum(float(p) * by_id[i].frame_len for i, p in self.probabilities.items())
        for m, rate in enumerate(rates):
            served = sum(float(p) * by_id[i].clearance[m] for i, p in self.probabilities.items())
            if served - float(rate) * frame < -tolerance:
                return False
        return True

    def lines(self) -> list[str]:
        return [f"{action_id}:{config.fmt_float(float(p))}" for action_id, p in sorted(self.probabilities.items())]


@dataclass(frozen=True)
class StationaryPolicy:
    """Time-sharing over the concrete actions a certificate was computed on."""
    actions: tuple[CodingAction, ...]
    probabilities: tuple[float, ...]

    @property
    def action_ids(self) -> tuple[int, ...]:
        return tuple(a.id for a in self.actions)

    def sample(self, rng: np.random.Generator) -> CodingAction:
        return self.actions[int(rng.choice(len(self.actions), p=self.probabilities))]

    def matches(self, action_set: ActionSet) -> bool:
        """True if every policy action is the action with the same id in action_set."""
        by_id = {a.id: a for a in action_set.actions}
        return all(by_id.get(a.id) == a for a in self.actions)


def _concrete_actions(action_set: ActionSet) -> list[CodingAction]:
    if action_set.has_templates:
        raise TemplateActionError("capacity needs concrete actions; expand templates with ActionSet.concrete()")
    return list(action_set.actions)


def _check_rates(action_set: ActionSet, rates: Sequence[float]) -> None:
    if len(rates) != action_set.spec.num_types:
        raise ValueError(f"expected {action_set.spec.num_types} rates, got {len(rates)}")
    if any(r < 0 for r in rates):
        raise ValueError("rates must be non-negative")


def _exact_certificate(actions: list[CodingAction], rates: Sequence[float]) -> CapacityCertificate | None:
    lam = [to_fraction(r) for r in rates]
    n_types = len(lam)
    # columns: one probability per action, one slack per type
    rows = []
    for m in range(n_types):
        row = [lam[m] * a.frame_len - a.clearance[m] for a in actions]
        row += [Fraction(1) if k == m else Fraction(0) for k in range(n_types)]
        rows.append(row)
    rows.append([Fraction(1)] * len(actions) + [Fraction(0)] * n_types)
    rhs = [Fraction(0)] * n_types + [Fraction(1)]
    x = find_feasible_point(rows, rhs)
    if x is None:
        return None
    probabilities = {a.id: x[k] for k, a in enumerate(actions) if x[k] != 0}
    return CapacityCertificate(probabilities=probabilities, slack=tuple(x[len(actions):]), exact=True)


def _float_certificate(actions: list[CodingAction], rates: Sequence[float]) -> CapacityCertificate | None:
    lam = np.asarray(rates, dtype=float)
    frames = np.array([a.frame_len for a in actions], dtype=float)
    mu = np.array([a.clearance for a in actions], dtype=float).T
    a_ub = np.outer(lam, frames) - mu
    res = linprog(
        c=np.zeros(len(actions)),
        A_ub=a_ub,
        b_ub=np.zeros(len(lam)),
        A_eq=np.ones((1, len(actions))),
        b_eq=np.ones(1),
        bounds=(0, None),
        method="highs",
    )
    if res.status == 2:
        return None
    if res.status != 0:
        logger.warning(f"Capacity: linprog завершился со статусом {res.status} ({res.message}), считаю точку недопустимой")
        return None
    p = np.clip(res.x, 0.0, None)
    probabilities = {a.id: float(p[k]) for k, a in enumerate(actions) if p[k] > config.LP_FLOAT_TOLERANCE}
    slack = tuple(float(s) for s in -(a_ub @ p))
    return CapacityCertificate(probabilities=probabilities, slack=slack, exact=False)


def in_capacity_region(action_set: ActionSet, rates: Sequence[float]) -> CapacityCertificate | None:
    """A randomizing certificate if the rates lie in the region of the action set, else None."""
    actions = _concrete_actions(action_set)
    _check_rates(action_set, rates)
    if len(actions) <= config.LP_EXACT_MAX_ACTIONS:
        return _exact_certificate(actions, rates)
    logger.debug(f"Capacity: {len(actions)} действий, использую LP с плавающей точкой (HiGHS)")
    return _float_certificate(actions, rates)


def max_scaled_rate(action_set: ActionSet, direction: Sequence[float],
                    tolerance: float = config.BISECTION_TOLERANCE) -> float:
    """Largest theta with theta * direction inside the region, to within the bisection tolerance."""
    actions = _concrete_actions(action_set)
    if len(direction) != action_set.spec.num_types:
        raise ValueError(f"expected a direction of length {action_set.spec.num_types}, got {len(direction)}")
    if any(d < 0 for d in direction) or not any(d > 0 for d in direction):
        raise ValueError("direction must be non-negative and nonzero")

    def feasible(theta: float) -> bool:
        return in_capacity_region(action_set, [theta * d for d in direction]) is not None

    best_efficiency = max(sum(a.clearance) / a.frame_len for a in actions)
    hi = best_efficiency / sum(direction)
    if feasible(hi):
        return hi
    lo = 0.0
    while hi - lo > tolerance:
        mid = (lo + hi) / 2
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    logger.info(f"Capacity: граница theta={config.fmt_float(lo)} по {len(actions)} действиям")
    return lo


def certificate_policy(certificate: CapacityCertificate, action_set: ActionSet) -> StationaryPolicy:
    by_id = {a.id: a for a in _concrete_actions(action_set)}
    ids = tuple(sorted(certificate.probabilities))
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise ValueError(f"certificate uses action ids {missing} that the action set lacks")
    weights = np.array([float(certificate.probabilities[i]) for i in ids])
    weights = weights / weights.sum()
    return StationaryPolicy(actions=tuple(by_id[i] for i in ids), probabilities=tuple(float(w) for w in weights))
