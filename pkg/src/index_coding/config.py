DEFAULT_PAYLOAD_BITS = 128

# Exact maximum-acyclic-subgraph search caps
EXACT_BOUND_MAX_USERS = 12
EXACT_BOUND_MAX_WANT_LINKS = 16

# Exhaustive cyclic-plan search cap (packets)
EXHAUSTIVE_MAX_PACKETS = 12

LP_EXACT_MAX_ACTIONS = 200
LP_FLOAT_TOLERANCE = 1e-9
BISECTION_TOLERANCE = 1e-4

DEFAULT_FRAMES = 200_000
DEFAULT_MAX_CYCLE_LEN = 3
LYAPUNOV_TRACE_EVERY = 1000
ARRIVAL_BLOCK_SLOTS = 4096

STABLE_RATIO = 0.01
UNSTABLE_RATIO = 0.05

OUTPUT_DIR_ENV = "INDEX_CODING_OUTPUT_DIR"
DB_PATH_ENV = "INDEX_CODING_DB"

CSV_COLUMNS = ("lambda", "algorithm", "seed", "frames", "total_avg_backlog", "max_QR_ratio", "wasted")
CSV_HEADER = ",".join(CSV_COLUMNS)


def fmt_float(value: float) -> str:
    return f"{value:.6g}"


def format_clearance_result(lower_bound: int, plan_slots: int | None, exact: bool) -> str:
    slots = "-" if plan_slots is None else str(plan_slots)
    return f"lower_bound={lower_bound} plan_slots={slots} exact={str(exact).lower()}"


def sim_row_fields(rate: float, algorithm: str, seed: int, frames: int,
                   total_avg_backlog: float, qr_ratio: float, wasted: int) -> list[str | int]:
    """One CSV record in CSV_COLUMNS order; the max_QR_ratio column holds the aggregate Q[R]/R."""
    return [fmt_float(rate), algorithm, seed, frames, fmt_float(total_avg_backlog), fmt_float(qr_ratio), wasted]


def stability_verdict(qr_ratio: float) -> str:
    """Verdict on the summed final backlog over the frame count, sum_m Q_m[R] / R."""
    if qr_ratio < STABLE_RATIO:
        return "stable"
    if qr_ratio > UNSTABLE_RATIO:
        return "unstable"
    return "inconclusive"
