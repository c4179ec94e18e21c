import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from index_coding import config
from index_coding.data_manager import database
from index_coding.data_manager.scheduler import ALGORITHMS, SimConfig, SimStats, SimulationConfigError, run_simulation
from index_coding.modules.capacity import certificate_policy, in_capacity_region, max_scaled_rate
from index_coding.modules.code_actions import ActionOptions, generate_action_set
from index_coding.modules.presets import per_user_direction, resolve_spec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    workload: str = "three-user"
    algorithms: tuple[str, ...] = ("mw2", "uncoded")
    rates: tuple[float, ...] = ()
    frames: int = config.DEFAULT_FRAMES
    seeds: tuple[int, ...] = (0,)
    options: ActionOptions = field(default_factory=ActionOptions)
    out: str = "sweep.csv"
    rho_sweep: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.rates and not self.rho_sweep:
            raise SimulationConfigError("experiment needs a rate grid or a rho sweep")
        for grid in (self.rates, self.rho_sweep):
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise SimulationConfigError(f"rate grid must be strictly increasing: {list(grid)}")
        if not self.seeds:
            raise SimulationConfigError("experiment needs at least one seed")
        if self.frames < 1:
            raise SimulationConfigError(f"frames must be at least 1, got {self.frames}")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown or not self.algorithms:
            raise SimulationConfigError(f"unknown algorithms {unknown}, expected some of {', '.join(ALGORITHMS)}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        kinds = data.get("action_kinds")
        options = ActionOptions(
            kinds=ActionOptions.parse_kinds(kinds) if isinstance(kinds, str)
            else frozenset(kinds or ActionOptions().kinds) | {"direct"},
            max_cycle_len=int(data.get("max_cycle_len", config.DEFAULT_MAX_CYCLE_LEN)),
            relay_mode=bool(data.get("relay_mode", False)),
        )
        return cls(
            workload=data.get("workload", "three-user"),
            algorithms=tuple(data.get("algorithms", ("mw2", "uncoded"))),
            rates=tuple(float(r) for r in data.get("rates", ())),
            frames=int(data.get("frames", config.DEFAULT_FRAMES)),
            seeds=tuple(int(s) for s in data.get("seeds", (0,))),
            options=options,
            out=data.get("out", "sweep.csv"),
            rho_sweep=tuple(float(r) for r in data.get("rho_sweep", ())),
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise SimulationConfigError(f"{path}: invalid JSON: {e}") from e
        if not isinstance(data, dict):
            raise SimulationConfigError(f"{path}: expected a JSON object")
        return cls.from_dict(data)


@dataclass(frozen=True)
class SweepJob:
    workload: str
    rate: float
    algorithm: str
    frames: int
    seed: int
    options: ActionOptions


def build_simulation(workload: str, rate: float, algorithm: str, frames: int, seed: int,
                     options: ActionOptions) -> SimConfig:
    """Simulation of a workload at a per-user rate; templates unless a stationary policy needs concrete actions."""
    base = resolve_spec(workload)
    spec = base.with_rates([rate * d for d in per_user_direction(base)])
    policy = None
    if algorithm == "stationary":
        action_set = generate_action_set(spec, replace(options, template=False))
        certificate = in_capacity_region(action_set, spec.rates)
        if certificate is None:
            raise SimulationConfigError(f"rate {rate} lies outside the capacity region, no stationary policy")
        policy = certificate_policy(certificate, action_set)
    else:
        action_set = generate_action_set(spec, replace(options, template=True))
    return SimConfig(spec=spec, action_set=action_set, algorithm=algorithm, frames=frames,
                     seed=seed, policy=policy, rate_label=rate)


def run_job(job: SweepJob) -> SimStats:
    sim = build_simulation(job.workload, job.rate, job.algorithm, job.frames, job.seed, job.options)
    return run_simulation(sim)


def boundary_rate(workload: str, options: ActionOptions) -> float:
    spec = resolve_spec(workload)
    action_set = generate_action_set(spec, replace(options, template=False))
    return max_scaled_rate(action_set, per_user_direction(spec))


def output_path(out: str | Path) -> Path:
    path = Path(out)
    if not path.is_absolute() and os.getenv(config.OUTPUT_DIR_ENV):
        path = Path(os.environ[config.OUTPUT_DIR_ENV]) / path
    return path


def write_csv(rows: list[SimStats], out: str | Path) -> Path:
    path = output_path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    fresh = not path.exists() or path.stat().st_size == 0
    with open(path, "a", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        if fresh:
            writer.writerow(config.CSV_COLUMNS)
        writer.writerows(stats.csv_fields() for stats in rows)
    logger.info(f"Sweep: записано {len(rows)} строк в {path}")
    return path


class SweepController:
    def __init__(self, experiment: ExperimentConfig, workers: int = 1, db_file: str | Path | None = None):
        self.experiment = experiment
        self.workers = max(1, workers)
        self.db_file = db_file
        self._results: list[SimStats] = []

    def rate_grid(self) -> list[float]:
        exp = self.experiment
        if not exp.rho_sweep:
            return list(exp.rates)
        theta = boundary_rate(exp.workload, exp.options)
        logger.info(f"Sweep: граничная нагрузка на пользователя {config.fmt_float(theta)} для {exp.workload}")
        return [rho * theta for rho in exp.rho_sweep]

    def jobs(self) -> list[SweepJob]:
        exp = self.experiment
        return [
            SweepJob(exp.workload, rate, algorithm, exp.frames, seed, exp.options)
            for algorithm in exp.algorithms
            for rate in self.rate_grid()
            for seed in exp.seeds
        ]

    def run(self) -> list[SimStats]:
        jobs = self.jobs()
        logger.info(f"Sweep: {len(jobs)} запусков на {self.workers} процессах")
        if self.workers == 1:
            results = [run_job(job) for job in jobs]
        else:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(run_job, jobs))
        if self.db_file and database.initialize_db(self.db_file):
            stored = sum(database.record_run(self.db_file, stats) for stats in results)
            logger.info(f"Sweep: сохранено {stored} из {len(results)} запусков в {self.db_file}")
        self._results = results
        return results

    def get_results(self) -> list[SimStats]:
        return self._results
