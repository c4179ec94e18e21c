"""Static clearance: acyclic-subgraph lower bounds, exact special cases, exhaustive cyclic plans."""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Sequence

import networkx as nx
import numpy as np

from index_coding import config
from index_coding.modules.code_actions import (
    CodingAction,
    TrafficSpec,
    direct_action,
    double_cycle_action,
    graph_traffic_spec,
    k_cycle_action,
    plan_messages,
)
from index_coding.modules.demand_graph import (
    DemandGraph,
    UserCycle,
    WeightedCompressedGraph,
    compress,
    enumerate_cycles,
    has_disjoint_cycles,
    relay_graph,
)

logger = logging.getLogger(__name__)

SOLVERS = ("auto", "bound", "two-user", "disjoint", "relay3", "exhaustive", "greedy")


class SolverError(ValueError):
    pass


class SizeCapError(SolverError):
    pass


class HypothesisError(SolverError):
    pass


class UserCountError(SolverError):
    pass


class ShapeError(SolverError):
    pass


@dataclass(frozen=True)
class ClearanceResult:
    lower_bound: int
    plan: tuple[CodingAction, ...] | None = None
    plan_slots: int | None = None
    solver: str = ""

    @property
    def exact(self) -> bool:
        return self.plan_slots is not None and self.plan_slots == self.lower_bound

    def messages(self) -> list[set[int]]:
        return plan_messages(self.plan or ())

    def summary(self) -> str:
        return config.format_clearance_result(self.lower_bound, self.plan_slots, self.exact)


# ---------------------------------------------------------------- lower bounds

def _cycle_in(have: Sequence[frozenset[int]], want: list[set[int]]) -> list[tuple[int, int]] | None:
    """Want links (packet, user) on some cycle of the current bipartite graph, or None."""
    g = nx.DiGraph()
    wanted = set().union(*want)
    for n, (h, r) in enumerate(zip(have, want), start=1):
        for p in h & wanted:
            g.add_edge(("u", n), ("p", p))
        for p in r:
            g.add_edge(("p", p), ("u", n))
    try:
        cycle = nx.find_cycle(g)
    except nx.NetworkXNoCycle:
        return None
    return sorted((a[1], b[1]) for a, b in cycle if a[0] == "p")


def _removal_cost(want: list[set[int]], packet: int) -> int:
    return 1 if sum(packet in r for r in want) == 1 else 0


def _greedy_lost(graph: DemandGraph) -> int:
    want = [set(r) for r in graph.want]
    lost = 0
    while (links := _cycle_in(graph.have, want)) is not None:
        p, n = min(links, key=lambda link: (_removal_cost(want, link[0]), link))
        lost += _removal_cost(want, p)
        want[n - 1].discard(p)
    return lost


def _exact_lost(graph: DemandGraph, upper: int) -> int:
    best = upper
    seen: set[frozenset[tuple[int, int]]] = set()
    visited = 0

    def search(removed: frozenset[tuple[int, int]], lost: int) -> None:
        nonlocal best, visited
        if lost >= best or removed in seen:
            return
        seen.add(removed)
        visited += 1
        want = [set(r) for r in graph.want]
        for p, n in removed:
            want[n - 1].discard(p)
        links = _cycle_in(graph.have, want)
        if links is None:
            best = lost
            return
        for p, n in sorted(links, key=lambda link: (_removal_cost(want, link[0]), link)):
            search(removed | {(p, n)}, lost + _removal_cost(want, p))

    search(frozenset(), 0)
    logger.debug(f"Solver: точный поиск ациклического подграфа перебрал {visited} подмножеств связей, потеряно {best}")
    return best


def acyclic_subgraph_bound(graph: DemandGraph, mode: str = "exact") -> int:
    """Packets kept by the best acyclic subgraph reachable through want-link removals."""
    if mode == "greedy":
        return graph.num_packets - _greedy_lost(graph)
    if mode != "exact":
        raise SolverError(f"unknown bound mode '{mode}'")
    links = len(graph.want_links())
    if graph.num_users > config.EXACT_BOUND_MAX_USERS or links > config.EXACT_BOUND_MAX_WANT_LINKS:
        raise SizeCapError(
            f"exact bound limited to {config.EXACT_BOUND_MAX_USERS} users and "
            f"{config.EXACT_BOUND_MAX_WANT_LINKS} want links, got {graph.num_users} and {links}"
        )
    return graph.num_packets - _exact_lost(graph, _greedy_lost(graph) + 1)


def best_available_bound(graph: DemandGraph) -> int:
    try:
        return acyclic_subgraph_bound(graph, "exact")
    except SizeCapError:
        logger.warning("Solver: граф превышает лимиты точной границы, использую жадную границу (greedy)")
        return acyclic_subgraph_bound(graph, "greedy")


# ---------------------------------------------------------------- plan helpers

class _PlanBuilder:
    def __init__(self, graph: DemandGraph):
        self.graph = graph
        self.spec: TrafficSpec | None = graph_traffic_spec(graph) if graph.num_packets else None
        self.actions: list[CodingAction] = []
        self.cleared: set[int] = set()

    def cycle(self, users: Sequence[int], packets: Sequence[int]) -> None:
        self._add(k_cycle_action(self.spec, UserCycle(tuple(users)), [p - 1 for p in packets], len(self.actions)), packets)

    def double(self, packets: Sequence[int]) -> None:
        self._add(double_cycle_action(self.spec, [p - 1 for p in packets], len(self.actions)), packets)

    def direct(self, packet: int) -> None:
        self._add(direct_action(self.spec, packet - 1, len(self.actions)), [packet])

    def direct_rest(self) -> None:
        for p in self.graph.packets():
            if p not in self.cleared:
                self.direct(p)

    def _add(self, action: CodingAction, packets: Sequence[int]) -> None:
        self.actions.append(action)
        self.cleared.update(packets)

    @property
    def slots(self) -> int:
        return sum(a.frame_len for a in self.actions)

    def result(self, lower_bound: int, solver: str) -> ClearanceResult:
        return ClearanceResult(lower_bound=lower_bound, plan=tuple(self.actions), plan_slots=self.slots, solver=solver)


def _min_link(links: Sequence[tuple[int, int]], weight) -> tuple[int, int]:
    return min(links, key=lambda link: (weight(*link), link))


# ---------------------------------------------------------------- exact special cases

def disjoint_cycle_clearance(graph: DemandGraph) -> ClearanceResult:
    """P minus the minimum link weight of every cycle, when cycles are disjoint and carry distinct unicast packets."""
    wcg = compress(graph)
    disjoint, cycles = has_disjoint_cycles(wcg)
    if not disjoint:
        raise HypothesisError("compressed graph has a link on more than one cycle")
    owner: dict[int, tuple[int, int]] = {}
    for cycle in cycles:
        for i, j in cycle.links():
            for p in graph.packets_on_link(i, j):
                if graph.wanters(p) != frozenset({j}):
                    raise HypothesisError(f"packet {p} on cycle link ({i},{j}) is multicast")
                if p in owner:
                    raise HypothesisError(f"packet {p} lies on cycle links {owner[p]} and ({i},{j})")
                owner[p] = (i, j)

    builder = _PlanBuilder(graph)
    for cycle in cycles:
        links = cycle.links()
        w_min = wcg.weight(*_min_link(links, wcg.weight))
        queues = [graph.packets_on_link(i, j) for i, j in links]
        for r in range(w_min):
            builder.cycle(cycle.nodes, [q[r] for q in queues])
    builder.direct_rest()
    logger.info(f"Solver: {len(cycles)} непересекающихся циклов, очистка за {builder.slots} слотов из {graph.num_packets}")
    return builder.result(builder.slots, "disjoint")


def two_user_clearance(graph: DemandGraph) -> ClearanceResult:
    if graph.num_users != 2:
        raise UserCountError(f"two-user clearance needs exactly 2 users, got {graph.num_users}")
    forward, backward = graph.packets_on_link(1, 2), graph.packets_on_link(2, 1)
    builder = _PlanBuilder(graph)
    for a, b in zip(forward, backward):
        builder.cycle((1, 2), (a, b))
    builder.direct_rest()
    return builder.result(builder.slots, "two-user")


def _relay_weights(weights: Sequence[Sequence[int]]) -> np.ndarray:
    try:
        w = np.asarray(weights, dtype=np.int64)
    except (TypeError, ValueError) as e:
        raise ShapeError(f"weights must be an integer matrix: {e}") from e
    if w.shape != (3, 3):
        raise ShapeError(f"three-user relay weights must be 3x3, got shape {w.shape}")
    if np.any(np.diag(w) != 0) or np.any(w < 0):
        raise ShapeError("relay weights need a zero diagonal and non-negative entries")
    return w


def three_user_relay_clearance(weights: Sequence[Sequence[int]]) -> ClearanceResult:
    """Pairwise 2-cycles at their minimum weight, then the residual 3-cycle z times."""
    w = _relay_weights(weights)
    graph = relay_graph(w.tolist())
    builder = _PlanBuilder(graph)
    queues = {(i, j): graph.packets_on_link(i, j) for i in range(1, 4) for j in range(1, 4) if i != j}
    taken = {link: 0 for link in queues}

    def pop(i: int, j: int) -> int:
        p = queues[(i, j)][taken[(i, j)]]
        taken[(i, j)] += 1
        return p

    residual = w.copy()
    for i, j in ((1, 2), (2, 3), (1, 3)):
        m = int(min(w[i - 1, j - 1], w[j - 1, i - 1]))
        residual[i - 1, j - 1] -= m
        residual[j - 1, i - 1] -= m
        for _ in range(m):
            builder.cycle((i, j), (pop(i, j), pop(j, i)))

    z = 0
    for orientation in ((1, 2, 3), (1, 3, 2)):
        links = UserCycle(orientation).links()
        z = int(min(residual[i - 1, j - 1] for i, j in links))
        if z > 0:
            for _ in range(z):
                builder.cycle(orientation, [pop(i, j) for i, j in links])
            logger.debug(f"Solver: остаточный 3-цикл {orientation} использован {z} раз")
            break
    builder.direct_rest()
    return builder.result(builder.slots, "relay3")


def row_column_structure_check(weights: Sequence[Sequence[int]]) -> bool:
    w = np.asarray(weights)
    nonzero = w != 0
    return bool(np.all(nonzero.sum(axis=1) <= 1) or np.all(nonzero.sum(axis=0) <= 1))


# ---------------------------------------------------------------- exhaustive and greedy cyclic plans

class _CyclicSearch:
    """Memoized search over the set of live packets.

    Cycle legs and double-cycles only use unicast packets, so an action clears
    every packet it touches and the state is just the live packet set.
    """

    def __init__(self, graph: DemandGraph, max_cycle_len: int | None = None):
        self.graph = graph
        self.unicast = {p for p in graph.packets() if len(graph.wanters(p)) == 1}
        self.cycles: list[UserCycle] = []
        limit = graph.num_users if max_cycle_len is None else min(max_cycle_len, graph.num_users)
        if limit >= 2 and self.unicast:
            weights = [[self._link_count(i, j) if i != j else 0 for j in graph.users()] for i in graph.users()]
            self.cycles = enumerate_cycles(WeightedCompressedGraph.from_matrix(weights), limit)
        self.doubles = self._double_triples()
        self.memo: dict[tuple, int] = {}

    def _link_packets(self, i: int, j: int, live: frozenset[int]) -> list[int]:
        return [p for p in self.graph.packets_on_link(i, j) if p in live and p in self.unicast]

    def _link_count(self, i: int, j: int) -> int:
        return sum(1 for p in self.graph.packets_on_link(i, j) if p in self.unicast)

    def _double_triples(self) -> list[tuple[int, int, int]]:
        g = self.graph
        found = []
        for triple in itertools.combinations(sorted(self.unicast), 3):
            users = [next(iter(g.wanters(p))) for p in triple]
            if len(set(users)) != 3:
                continue
            if all(users[a] in g.holders(triple[b]) for a in range(3) for b in range(3) if a != b):
                found.append(triple)
        return found

    def _signature(self, live: frozenset[int]) -> tuple:
        g = self.graph
        return tuple(sorted((tuple(sorted(g.holders(p))), tuple(sorted(g.wanters(p)))) for p in live))

    def cycle_choices(self, cycle: UserCycle, live: frozenset[int]) -> list[tuple[int, ...]]:
        per_leg = []
        for i, j in cycle.links():
            classes: dict[tuple, int] = {}
            for p in self._link_packets(i, j, live):
                classes.setdefault(tuple(sorted(self.graph.holders(p))), p)
            if not classes:
                return []
            per_leg.append(sorted(classes.values()))
        return list(itertools.product(*per_leg))

    def moves(self, live: frozenset[int]):
        """(slots, packets, kind, users) in order of decreasing efficiency."""
        for triple in self.doubles:
            if all(p in live for p in triple):
                yield 1, triple, "double", ()
        for cycle in self.cycles:
            for packets in self.cycle_choices(cycle, live):
                yield cycle.length - 1, packets, "cycle", cycle.nodes
        classes: dict[tuple, int] = {}
        for p in sorted(live):
            classes.setdefault(self._signature(frozenset({p})), p)
        for p in sorted(classes.values()):
            yield 1, (p,), "direct", ()

    def cost(self, live: frozenset[int]) -> int:
        if not live:
            return 0
        key = self._signature(live)
        if key in self.memo:
            return self.memo[key]
        best = len(live)
        floor = -(-len(live) // 3)
        for slots, packets, _, _ in self.moves(live):
            if slots >= best:
                continue
            best = min(best, slots + self.cost(live - set(packets)))
            if best == floor:
                break
        self.memo[key] = best
        return best

    def replay(self, builder: _PlanBuilder, live: frozenset[int]) -> None:
        while live:
            target = self.cost(live)
            for slots, packets, kind, users in self.moves(live):
                rest = live - set(packets)
                if slots + self.cost(rest) == target:
                    self.apply(builder, kind, users, packets)
                    live = rest
                    break

    @staticmethod
    def apply(builder: _PlanBuilder, kind: str, users: tuple[int, ...], packets: Sequence[int]) -> None:
        if kind == "double":
            builder.double(packets)
        elif kind == "cycle":
            builder.cycle(users, packets)
        else:
            builder.direct(packets[0])


def optimal_cyclic_plan(graph: DemandGraph, max_cycle_len: int | None = None,
                        forced_cycle: UserCycle | None = None) -> ClearanceResult:
    """Fewest slots over sequences of direct, k-cycle and double-cycle actions.

    With forced_cycle the first action must be one round of that user cycle.
    """
    if graph.num_packets > config.EXHAUSTIVE_MAX_PACKETS:
        raise SizeCapError(f"exhaustive search limited to {config.EXHAUSTIVE_MAX_PACKETS} packets, got {graph.num_packets}")
    search = _CyclicSearch(graph, max_cycle_len)
    builder = _PlanBuilder(graph)
    live = frozenset(graph.packets())
    if forced_cycle is not None:
        choices = search.cycle_choices(forced_cycle, live)
        if not choices:
            raise SolverError(f"cycle {forced_cycle.nodes} has no unicast packets on some link")
        packets = min(choices, key=lambda c: (search.cost(live - set(c)), c))
        builder.cycle(forced_cycle.nodes, packets)
        live = live - set(packets)
    search.replay(builder, live)
    bound = best_available_bound(graph)
    logger.info(f"Solver: полный перебор дал план на {builder.slots} слотов, граница {bound}, состояний {len(search.memo)}")
    return builder.result(bound, "exhaustive")


def greedy_cyclic_plan(graph: DemandGraph, max_cycle_len: int | None = None,
                       prefer: Sequence[int] | None = None) -> ClearanceResult:
    """Repeatedly grab the first available cycle (shortest first, then by user ids), then send the rest directly."""
    search = _CyclicSearch(graph, max_cycle_len)
    builder = _PlanBuilder(graph)
    live = frozenset(graph.packets())
    order = list(search.cycles)
    if prefer is not None:
        preferred = UserCycle.canonical(list(prefer))
        order = [preferred] + [c for c in order if c != preferred]
    while True:
        for cycle in order:
            choices = search.cycle_choices(cycle, live)
            if choices:
                builder.cycle(cycle.nodes, choices[0])
                live = live - set(choices[0])
                break
        else:
            break
    builder.direct_rest()
    return builder.result(acyclic_subgraph_bound(graph, "greedy"), "greedy")


# ---------------------------------------------------------------- dispatch

def relay_weights_of(graph: DemandGraph) -> list[list[int]] | None:
    """Weight matrix if every packet has exactly one holder and one wanter."""
    for p in graph.packets():
        if len(graph.holders(p)) != 1 or len(graph.wanters(p)) != 1:
            return None
    return [list(row) for row in compress(graph).weights]


def solve_static(graph: DemandGraph, solver: str = "auto",
                 max_cycle_len: int | None = None) -> ClearanceResult:
    if solver not in SOLVERS:
        raise SolverError(f"unknown solver '{solver}', expected one of {', '.join(SOLVERS)}")
    if solver == "bound":
        return ClearanceResult(lower_bound=best_available_bound(graph), solver="bound")
    if solver == "two-user":
        return two_user_clearance(graph)
    if solver == "disjoint":
        return disjoint_cycle_clearance(graph)
    if solver == "relay3":
        weights = relay_weights_of(graph)
        if weights is None or graph.num_users != 3:
            raise HypothesisError("relay3 needs a 3-user graph with one holder and one wanter per packet")
        return three_user_relay_clearance(weights)
    if solver == "exhaustive":
        return optimal_cyclic_plan(graph, max_cycle_len)
    if solver == "greedy":
        return greedy_cyclic_plan(graph, max_cycle_len)

    if graph.num_users == 2:
        return two_user_clearance(graph)
    try:
        return disjoint_cycle_clearance(graph)
    except HypothesisError as e:
        logger.debug(f"Solver: формула непересекающихся циклов неприменима ({e})")
    weights = relay_weights_of(graph)
    if graph.num_users == 3 and weights is not None:
        return three_user_relay_clearance(weights)
    if graph.num_packets <= config.EXHAUSTIVE_MAX_PACKETS:
        return optimal_cyclic_plan(graph, max_cycle_len)
    logger.warning("Solver: точный метод неприменим, перехожу на жадный циклический план (greedy)")
    return greedy_cyclic_plan(graph, max_cycle_len)


def relay_total_slots(result: ClearanceResult, graph: DemandGraph) -> int:
    """Uplink plus downlink slots when every packet first travels to the relay."""
    if result.plan_slots is None:
        raise SolverError("result carries no plan")
    return result.plan_slots + graph.num_packets
