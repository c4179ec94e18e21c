import argparse

from index_coding import config
from index_coding.data_manager.scheduler import ALGORITHMS
from index_coding.modules.clearance_solver import SOLVERS


def _add_action_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--action-kinds",
        default="direct,cycle,double-cycle",
        help="comma-separated subset of direct,cycle,double-cycle (direct is always included)",
    )
    parser.add_argument(
        "--max-cycle-len",
        type=int,
        default=config.DEFAULT_MAX_CYCLE_LEN,
        help="longest user cycle turned into a coding action",
    )
    parser.add_argument(
        "--relay-mode",
        action="store_true",
        help="charge one uplink slot per cleared packet",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="index-coding",
        description="Static and dynamic index coding: clearance bounds, capacity checks and max-weight simulation",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve-static", help="minimum clearance time of a static demand graph")
    solve.add_argument("--graph", required=True, help="graph file or preset (swap, fig1, fig4a, fig5a, fig5b, fig6)")
    solve.add_argument("--algorithm", default="auto", choices=SOLVERS, help="solver to use")
    solve.add_argument("--max-cycle-len", type=int, help="longest user cycle in a plan (default: number of users)")
    solve.add_argument("--relay-mode", action="store_true", help="also report uplink plus downlink slots")
    solve.add_argument("--show-plan", action="store_true", help="print the coding plan, one action per line")

    capacity = sub.add_parser("capacity", help="capacity-region boundary along a rate direction")
    capacity.add_argument("--spec", default="three-user", help="workload preset, graph preset or graph file")
    capacity.add_argument(
        "--direction",
        default="per-user",
        help="'per-user' or comma-separated non-negative weights, one per traffic type",
    )
    capacity.add_argument("--rates", help="comma-separated rates to test instead of probing the boundary")
    _add_action_options(capacity)

    actions = sub.add_parser("actions", help="dump the generated action set")
    actions.add_argument("--spec", default="three-user", help="workload preset, graph preset or graph file")
    actions.add_argument("--template", action="store_true", help="defer cycle leg types to scheduling time")
    _add_action_options(actions)

    simulate = sub.add_parser("simulate", help="one simulation run, printed as a CSV row")
    simulate.add_argument("--spec", default="three-user", help="workload preset, graph preset or graph file")
    simulate.add_argument("--rate", type=float, required=True, help="per-user arrival rate")
    simulate.add_argument("--algorithm", default="mw2", choices=ALGORITHMS)
    simulate.add_argument("--frames", type=int, default=config.DEFAULT_FRAMES)
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--out", help="append the row to this CSV file")
    simulate.add_argument("--db", help="SQLite run store (default from $" + config.DB_PATH_ENV + ")")
    _add_action_options(simulate)

    sweep = sub.add_parser("sweep", help="rate grid x seeds x algorithms, written as CSV")
    sweep.add_argument("--config", required=True, help="JSON experiment file")
    sweep.add_argument("--out", help="override the CSV path of the experiment file")
    sweep.add_argument("--frames", type=int, help="override the frame count")
    sweep.add_argument("--seeds", help="override the seeds, comma-separated")
    sweep.add_argument("--workers", type=int, default=1, help="worker processes")
    sweep.add_argument("--db", help="SQLite run store (default from $" + config.DB_PATH_ENV + ")")

    verify = sub.add_parser("verify-code", help="check that an XOR code lets every user decode")
    verify.add_argument("--graph", required=True, help="graph file or preset")
    verify.add_argument("--messages", required=True, help="one XOR message per line, packet ids")

    return parser
