"""Frame-based queue dynamics and max-weight selection of coding actions.

Each frame the scheduler picks one action from the backlogs at the frame
start, serves up to mu_m(a) head-of-line packets of each type, and adds the
arrivals of the frame's T(a) slots:

    Q_m[r+1] = max(Q_m[r] - mu_m(a[r]), 0) + arrivals_m[r]
"""
from __future__ import annotations

import csv
import io
import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from index_coding import config
from index_coding.data_manager.arrivals import ArrivalStream
from index_coding.modules.capacity import StationaryPolicy
from index_coding.modules.code_actions import ActionSet, ActionTemplate, CodingAction, TrafficSpec

logger = logging.getLogger(__name__)

ALGORITHMS = ("mw1", "mw2", "uncoded", "stationary")
POLICY_SPAWN_KEY = (0xC0DE, 0)


class SimulationConfigError(ValueError):
    pass


@dataclass
class QueueState:
    frame_index: int
    slot: int
    backlogs: np.ndarray
    pending: list[deque[int]]

    @classmethod
    def empty(cls, num_types: int) -> "QueueState":
        return cls(frame_index=0, slot=0, backlogs=np.zeros(num_types, dtype=np.int64),
                   pending=[deque() for _ in range(num_types)])

    @classmethod
    def from_backlogs(cls, backlogs) -> "QueueState":
        """Queues preloaded at slot 0."""
        q = np.asarray(backlogs, dtype=np.int64)
        return cls(frame_index=0, slot=0, backlogs=q.copy(), pending=[deque([0] * int(n)) for n in q])


@dataclass(frozen=True)
class FrameRecord:
    action_id: int
    frame_len: int
    backlog: np.ndarray
    arrivals: np.ndarray
    served: np.ndarray
    wasted: np.ndarray
    lyapunov: float
    delay_total: int = 0


class ActionTable:
    """Vectorized per-action data for the max-weight rules.

    Every action is a list of legs, every leg a list of candidate types; a
    concrete action has one candidate per leg. The leg value is the largest
    candidate backlog, so a template binds each leg to its longest queue.
    """

    def __init__(self, action_set: ActionSet):
        self.action_set = action_set
        self.actions = action_set.actions
        m = action_set.spec.num_types
        legs = [a.leg_candidates for a in self.actions]
        max_legs = max(len(lc) for lc in legs)
        max_cands = max(len(c) for lc in legs for c in lc)
        # index m -> -inf (missing candidate), m+1 -> 0 (missing leg)
        cands = np.full((len(legs), max_legs, max_cands), m + 1, dtype=np.int64)
        for k, lc in enumerate(legs):
            for leg, options in enumerate(lc):
                cands[k, leg, :] = m
                cands[k, leg, :len(options)] = options
        self.candidates = cands
        self.frame_lens = np.array([a.frame_len for a in self.actions], dtype=float)
        self._extended = np.zeros(m + 2, dtype=float)
        self._extended[m] = -np.inf

    def leg_sums(self, backlogs) -> np.ndarray:
        self._extended[:-2] = backlogs
        return self._extended[self.candidates].max(axis=2).sum(axis=1)

    def _pick(self, weights: np.ndarray, backlogs) -> CodingAction:
        action = self.actions[int(np.argmax(weights))]
        if isinstance(action, ActionTemplate):
            return action.bind(self.action_set.spec, backlogs)
        return action

    def mw1(self, backlogs, rates) -> CodingAction:
        drift = float(np.dot(backlogs, rates))
        return self._pick(self.leg_sums(backlogs) - self.frame_lens * drift, backlogs)

    def mw2(self, backlogs) -> CodingAction:
        return self._pick(self.leg_sums(backlogs) / self.frame_lens, backlogs)


def mw1_select(backlogs, rates, action_set: ActionSet) -> CodingAction:
    """Maximize sum_m Q_m (mu_m - lambda_m T); ties go to the smallest action id."""
    return ActionTable(action_set).mw1(np.asarray(backlogs, dtype=float), np.asarray(rates, dtype=float))


def mw2_select(backlogs, action_set: ActionSet) -> CodingAction:
    """Maximize sum_m Q_m mu_m / T; ties go to the smallest action id."""
    return ActionTable(action_set).mw2(np.asarray(backlogs, dtype=float))


def step_frame(state: QueueState, action: CodingAction, arrivals: ArrivalStream) -> tuple[QueueState, FrameRecord]:
    """Advance one frame in place; null packets served from empty queues count as wasted."""
    before = state.backlogs.copy()
    mu = np.asarray(action.clearance, dtype=np.int64)
    served = np.minimum(before, mu)
    frame_end = state.slot + action.frame_len
    delay_total = 0
    for m in np.flatnonzero(served):
        queue = state.pending[m]
        for _ in range(int(served[m])):
            delay_total += frame_end - queue.popleft()

    counts, stamps = arrivals.take(action.frame_len)
    for m, slots in enumerate(stamps):
        state.pending[m].extend(slots)

    record = FrameRecord(
        action_id=action.id,
        frame_len=action.frame_len,
        backlog=before,
        arrivals=counts,
        served=served,
        wasted=mu - served,
        lyapunov=0.5 * float(np.dot(before, before)),
        delay_total=delay_total,
    )
    state.backlogs = before - served + counts
    state.frame_index += 1
    state.slot = frame_end
    return state, record


@dataclass(frozen=True)
class SimConfig:
    spec: TrafficSpec
    action_set: ActionSet
    algorithm: str = "mw2"
    frames: int = config.DEFAULT_FRAMES
    seed: int = 0
    policy: StationaryPolicy | None = None
    rate_label: float | None = None
    trace_every: int = config.LYAPUNOV_TRACE_EVERY

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise SimulationConfigError(f"unknown algorithm '{self.algorithm}', expected one of {', '.join(ALGORITHMS)}")
        if self.frames < 1:
            raise SimulationConfigError(f"frames must be at least 1, got {self.frames}")
        if self.spec.rates is None:
            raise SimulationConfigError("simulation needs arrival rates on the traffic spec")
        if self.action_set.spec.num_types != self.spec.num_types:
            raise SimulationConfigError("action set and traffic spec disagree on the number of types")
        if self.algorithm == "stationary":
            if self.policy is None:
                raise SimulationConfigError("the stationary algorithm needs a policy from a capacity certificate")
            if not self.policy.matches(self.action_set):
                raise SimulationConfigError("the stationary policy was certified on a different action set")
        if self.trace_every < 1:
            raise SimulationConfigError("trace_every must be positive")

    @property
    def label(self) -> float:
        if self.rate_label is not None:
            return self.rate_label
        return sum(self.spec.rates) / self.spec.num_users


@dataclass(frozen=True)
class SimStats:
    rate: float
    algorithm: str
    seed: int
    frames: int
    total_slots: int
    avg_backlog: tuple[float, ...]
    final_backlog: tuple[int, ...]
    wasted_per_type: tuple[int, ...]
    mean_delay: float
    lyapunov_trace: tuple[tuple[int, float], ...] = ()
    records: tuple[FrameRecord, ...] = field(default=(), repr=False)

    @property
    def total_avg_backlog(self) -> float:
        return float(sum(self.avg_backlog))

    @property
    def qr_ratios(self) -> tuple[float, ...]:
        return tuple(q / self.frames for q in self.final_backlog)

    @property
    def max_qr_ratio(self) -> float:
        return max(self.qr_ratios)

    @property
    def total_qr_ratio(self) -> float:
        return sum(self.final_backlog) / self.frames

    @property
    def wasted(self) -> int:
        return int(sum(self.wasted_per_type))

    @property
    def verdict(self) -> str:
        return config.stability_verdict(self.total_qr_ratio)

    def csv_fields(self) -> list[str | int]:
        return config.sim_row_fields(self.rate, self.algorithm, self.seed, self.frames,
                                     self.total_avg_backlog, self.total_qr_ratio, self.wasted)

    def csv_row(self) -> str:
        buffer = io.StringIO()
        csv.writer(buffer, lineterminator="").writerow(self.csv_fields())
        return buffer.getvalue()


def run_simulation(sim: SimConfig, keep_records: bool = False) -> SimStats:
    spec = sim.spec
    rates = np.asarray(spec.rates, dtype=float)
    action_set = sim.action_set.direct_only() if sim.algorithm == "uncoded" else sim.action_set
    table = ActionTable(action_set)
    stream = ArrivalStream(rates, sim.seed)
    policy_rng = np.random.default_rng(np.random.SeedSequence(entropy=sim.seed, spawn_key=POLICY_SPAWN_KEY))
    state = QueueState.empty(spec.num_types)

    backlog_area = np.zeros(spec.num_types, dtype=float)
    wasted = np.zeros(spec.num_types, dtype=np.int64)
    delay_total = 0
    served_total = 0
    trace: list[tuple[int, float]] = []
    records: list[FrameRecord] = []

    logger.info(f"Scheduler: запуск {sim.algorithm}, кадров {sim.frames}, seed {sim.seed}, "
                f"действий {len(action_set)}")
    for r in range(sim.frames):
        q = state.backlogs.astype(float)
        if sim.algorithm == "mw1":
            action = table.mw1(q, rates)
        elif sim.algorithm == "stationary":
            action = sim.policy.sample(policy_rng)
        else:
            action = table.mw2(q)
        state, record = step_frame(state, action, stream)

        backlog_area += record.backlog * record.frame_len
        wasted += record.wasted
        delay_total += record.delay_total
        served_total += int(record.served.sum())
        if r % sim.trace_every == 0:
            trace.append((r, record.lyapunov))
            logger.debug(f"Scheduler: кадр {r}, суммарная очередь {int(record.backlog.sum())}")
        if keep_records:
            records.append(record)

    stats = SimStats(
        rate=sim.label,
        algorithm=sim.algorithm,
        seed=sim.seed,
        frames=sim.frames,
        total_slots=state.slot,
        avg_backlog=tuple(float(v) for v in backlog_area / state.slot),
        final_backlog=tuple(int(v) for v in state.backlogs),
        wasted_per_type=tuple(int(v) for v in wasted),
        mean_delay=delay_total / served_total if served_total else 0.0,
        lyapunov_trace=tuple(trace),
        records=tuple(records),
    )
    logger.info(f"Scheduler: {sim.algorithm} завершён при нагрузке {config.fmt_float(stats.rate)}: "
                f"средняя очередь {config.fmt_float(stats.total_avg_backlog)}, Q/R суммарно {config.fmt_float(stats.total_qr_ratio)} "
                f"(максимум по типам {config.fmt_float(stats.max_qr_ratio)}), "
                f"вердикт {stats.verdict}")
    return stats


def replay_queues(records, initial) -> np.ndarray:
    """Recompute the backlog trajectory from recorded clearances and arrivals; row r is Q[r]."""
    q = np.asarray(initial, dtype=np.int64)
    rows = [q]
    for rec in records:
        mu = rec.served + rec.wasted
        q = np.maximum(q - mu, 0) + rec.arrivals
        rows.append(q)
    return np.stack(rows)
