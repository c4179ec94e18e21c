"""Built-in demand graphs and the symmetric 3-user workload."""
from __future__ import annotations

from pathlib import Path
from typing import Callable, Sequence

from index_coding.modules.code_actions import TrafficSpec, TrafficType, graph_traffic_spec
from index_coding.modules.demand_graph import DemandGraph, build_graph, load_graph, relay_graph

THREE_USER_SIDE_SETS = ("none", "lower", "higher", "both")


def link_graph(num_users: int, links: Sequence[tuple[int, int]]) -> DemandGraph:
    """Unicast graph where packet k+1 is held by links[k][0] and wanted by links[k][1]."""
    have: list[set[int]] = [set() for _ in range(num_users)]
    want: list[set[int]] = [set() for _ in range(num_users)]
    for packet, (src, dst) in enumerate(links, start=1):
        have[src - 1].add(packet)
        want[dst - 1].add(packet)
    return build_graph(num_users, have, want)


def swap_graph() -> DemandGraph:
    return link_graph(2, [(2, 1), (1, 2)])


def fig1_graph() -> DemandGraph:
    return build_graph(3, [{5}, set(), {4}], [{1, 2}, {1, 2, 4}, {3, 5}])


FIG4A_WEIGHTS = (
    (0, 4, 0, 0, 0, 0, 4),
    (6, 0, 8, 0, 0, 0, 0),
    (0, 0, 0, 5, 0, 0, 0),
    (0, 0, 0, 0, 4, 0, 0),
    (0, 0, 7, 0, 0, 6, 0),
    (0, 0, 0, 0, 0, 0, 1),
    (0, 0, 0, 0, 0, 3, 0),
)


def fig4a_graph() -> DemandGraph:
    return relay_graph(FIG4A_WEIGHTS)


# A..G = packets 1..7
FIG5A_LINKS = ((1, 2), (2, 3), (3, 1), (3, 4), (4, 2), (4, 5), (5, 3))

# A..I = packets 1..9
FIG5B_LINKS = ((6, 1), (6, 4), (4, 5), (5, 3), (2, 3), (1, 2), (2, 4), (3, 6), (5, 1))

FIG5B_MESSAGES = (
    frozenset({5, 7, 6}),
    frozenset({8, 5}),
    frozenset({8, 4}),
    frozenset({1, 2, 8}),
    frozenset({3, 2}),
    frozenset({3, 7}),
    frozenset({3, 9, 4}),
)


def fig5a_graph() -> DemandGraph:
    return link_graph(5, FIG5A_LINKS)


def fig5b_graph() -> DemandGraph:
    return link_graph(6, FIG5B_LINKS)


def fig6_graph() -> DemandGraph:
    return build_graph(3, [{3, 4}, set(), {1}], [{1}, {2, 3}, {3, 4}])


GRAPH_PRESETS: dict[str, Callable[[], DemandGraph]] = {
    "swap": swap_graph,
    "fig1": fig1_graph,
    "fig4a": fig4a_graph,
    "fig5a": fig5a_graph,
    "fig5b": fig5b_graph,
    "fig6": fig6_graph,
}


def three_user_type_index(dest: int, side: str) -> int:
    return 4 * (dest - 1) + THREE_USER_SIDE_SETS.index(side)


def three_user_workload(per_user_rate: float | None = None) -> TrafficSpec:
    """12 unicast types: every destination with side info at none, the lower, the higher or both other users.

    A per-user rate is split evenly over that user's four types.
    """
    types = []
    for dest in (1, 2, 3):
        lower, higher = [u for u in (1, 2, 3) if u != dest]
        for side in ({}, {lower}, {higher}, {lower, higher}):
            types.append(TrafficType(dest_set=frozenset({dest}), side_set=frozenset(side)))
    rates = None if per_user_rate is None else tuple([per_user_rate / 4] * len(types))
    return TrafficSpec(num_users=3, types=tuple(types), rates=rates)


def per_user_direction(spec: TrafficSpec) -> list[float]:
    """Direction whose scale factor is the arrival rate seen by each destination user."""
    per_dest = {}
    for t in spec.types:
        for n in t.dest_set:
            per_dest[n] = per_dest.get(n, 0) + 1
    return [1.0 / max(per_dest[n] for n in t.dest_set) for t in spec.types]


SPEC_PRESETS: dict[str, Callable[[], TrafficSpec]] = {
    "three-user": three_user_workload,
}


def resolve_graph(name_or_path: str) -> DemandGraph:
    if name_or_path in GRAPH_PRESETS:
        return GRAPH_PRESETS[name_or_path]()
    return load_graph(Path(name_or_path))


def resolve_spec(name_or_path: str) -> TrafficSpec:
    """A workload preset, or the per-packet traffic types of a graph preset or graph file."""
    if name_or_path in SPEC_PRESETS:
        return SPEC_PRESETS[name_or_path]()
    return graph_traffic_spec(resolve_graph(name_or_path))
