import argparse
import csv
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from index_coding import config
from index_coding.data_manager import database
from index_coding.data_manager.scheduler import run_simulation
from index_coding.modules.capacity import in_capacity_region, max_scaled_rate
from index_coding.modules.clearance_solver import best_available_bound, relay_total_slots, solve_static
from index_coding.modules.code_actions import (
    ActionOptions,
    dump_action_set,
    format_action,
    generate_action_set,
    verify_linear_code,
)
from index_coding.modules.demand_graph import parse_messages
from index_coding.modules.presets import per_user_direction, resolve_graph, resolve_spec
from index_coding.sweep_controller import ExperimentConfig, SweepController, build_simulation, write_csv

logger = logging.getLogger(__name__)


def _options(args: argparse.Namespace, template: bool = False) -> ActionOptions:
    if args.max_cycle_len < 2:
        raise ValueError(f"--max-cycle-len must be at least 2, got {args.max_cycle_len}")
    return ActionOptions(
        kinds=ActionOptions.parse_kinds(args.action_kinds),
        max_cycle_len=args.max_cycle_len,
        relay_mode=args.relay_mode,
        template=template,
    )


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ValueError(f"bad {what} list '{text}'") from e


def _db_file(args: argparse.Namespace) -> str | None:
    return args.db or os.getenv(config.DB_PATH_ENV)


def cmd_solve_static(args: argparse.Namespace) -> int:
    graph = resolve_graph(args.graph)
    result = solve_static(graph, args.algorithm, args.max_cycle_len)
    print(result.summary())
    if args.relay_mode and result.plan_slots is not None:
        print(f"relay_total_slots={relay_total_slots(result, graph)}")
    if args.show_plan and result.plan:
        for action in result.plan:
            print(format_action(action))
    logger.info(f"Solve: {args.graph} решён методом {result.solver}: {result.summary()}")
    return 0


def cmd_capacity(args: argparse.Namespace) -> int:
    spec = resolve_spec(args.spec)
    action_set = generate_action_set(spec, _options(args))
    if args.rates:
        rates = _floats(args.rates, "rate")
        certificate = in_capacity_region(action_set, rates)
        print(f"feasible={str(certificate is not None).lower()}")
        if certificate is not None:
            print("\n".join(certificate.lines()))
        return 0

    direction = per_user_direction(spec) if args.direction == "per-user" else _floats(args.direction, "direction")
    theta = max_scaled_rate(action_set, direction)
    print(f"theta={config.fmt_float(theta)}")
    print(f"total_rate={config.fmt_float(theta * sum(direction))}")
    certificate = in_capacity_region(action_set, [0.99 * theta * d for d in direction])
    print(f"feasible={str(certificate is not None).lower()}")
    if certificate is not None:
        print("\n".join(certificate.lines()))
    return 0


def cmd_actions(args: argparse.Namespace) -> int:
    spec = resolve_spec(args.spec)
    action_set = generate_action_set(spec, _options(args, template=args.template))
    sys.stdout.write(dump_action_set(action_set))
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    sim = build_simulation(args.spec, args.rate, args.algorithm, args.frames, args.seed, _options(args))
    stats = run_simulation(sim)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(config.CSV_COLUMNS)
    writer.writerow(stats.csv_fields())
    if args.out:
        write_csv([stats], args.out)
    db_file = _db_file(args)
    if db_file and database.initialize_db(db_file):
        database.record_run(db_file, stats)
    logger.info(f"Simulate: вердикт {stats.verdict}, средняя задержка {config.fmt_float(stats.mean_delay)} слотов")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    experiment = ExperimentConfig.from_json(args.config)
    if args.frames is not None:
        experiment = replace(experiment, frames=args.frames)
    if args.seeds:
        experiment = replace(experiment, seeds=tuple(int(s) for s in _floats(args.seeds, "seed")))
    if args.out:
        experiment = replace(experiment, out=args.out)
    controller = SweepController(experiment, workers=args.workers, db_file=_db_file(args))
    results = controller.run()
    path = write_csv(results, experiment.out)
    print(f"rows={len(results)} out={path}")
    return 0


def cmd_verify_code(args: argparse.Namespace) -> int:
    graph = resolve_graph(args.graph)
    messages = parse_messages(Path(args.messages).read_text(encoding="utf-8"), graph.num_packets)
    if verify_linear_code(graph, messages):
        print(f"decodable=true slots={len(messages)} bound={best_available_bound(graph)}")
    else:
        print("decodable=false")
    return 0


COMMANDS = {
    "solve-static": cmd_solve_static,
    "capacity": cmd_capacity,
    "actions": cmd_actions,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "verify-code": cmd_verify_code,
}


def run_command(args: argparse.Namespace) -> int:
    handler = COMMANDS[args.command]
    try:
        return handler(args)
    except (ValueError, OSError) as e:
        logger.error(f"CLI: команда {args.command} завершилась ошибкой: {e}", exc_info=args.verbose)
        print(f"error: {e}", file=sys.stderr)
        return 2
