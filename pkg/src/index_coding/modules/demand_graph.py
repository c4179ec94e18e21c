"""Directed bipartite demand graphs and their weighted compressed graphs.

A demand graph has user nodes 1..N and packet nodes 1..P. A user->packet link
means the user already has the packet, a packet->user link means the user
wants it. Graphs are immutable; every transformation returns a new graph.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

logger = logging.getLogger(__name__)


class GraphValidationError(ValueError):
    pass


class OverlapError(GraphValidationError):
    pass


class OrphanPacketError(GraphValidationError):
    pass


class UnknownIdError(GraphValidationError):
    pass


class GraphFormatError(GraphValidationError):
    pass


@dataclass(frozen=True)
class DemandGraph:
    num_users: int
    num_packets: int
    have: tuple[frozenset[int], ...]
    want: tuple[frozenset[int], ...]

    def __post_init__(self):
        if self.num_users < 1:
            raise GraphValidationError(f"num_users must be positive, got {self.num_users}")
        if len(self.have) != self.num_users or len(self.want) != self.num_users:
            raise GraphValidationError("have/want must list exactly one set per user")
        valid_ids = range(1, self.num_packets + 1)
        wanted: set[int] = set()
        for user in self.users():
            h, r = self.have_of(user), self.want_of(user)
            bad = [p for p in h | r if p not in valid_ids]
            if bad:
                raise UnknownIdError(f"user {user} references unknown packets {sorted(bad)}")
            common = h & r
            if common:
                raise OverlapError(f"user {user} both has and wants packets {sorted(common)}")
            wanted |= r
        orphans = sorted(set(valid_ids) - wanted)
        if orphans:
            raise OrphanPacketError(f"packets {orphans} are wanted by no user")

    def users(self) -> range:
        return range(1, self.num_users + 1)

    def packets(self) -> range:
        return range(1, self.num_packets + 1)

    def have_of(self, user: int) -> frozenset[int]:
        return self.have[user - 1]

    def want_of(self, user: int) -> frozenset[int]:
        return self.want[user - 1]

    def holders(self, packet: int) -> frozenset[int]:
        return frozenset(n for n in self.users() if packet in self.have[n - 1])

    def wanters(self, packet: int) -> frozenset[int]:
        return frozenset(n for n in self.users() if packet in self.want[n - 1])

    def want_links(self) -> list[tuple[int, int]]:
        """All (packet, user) want links in sorted order."""
        return sorted((p, n) for n in self.users() for p in self.want_of(n))

    def packets_on_link(self, i: int, j: int) -> list[int]:
        return sorted(self.have_of(i) & self.want_of(j))


@dataclass(frozen=True)
class WeightedCompressedGraph:
    num_users: int
    weights: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.weights) != self.num_users or any(len(row) != self.num_users for row in self.weights):
            raise GraphValidationError(f"weights must be a {self.num_users}x{self.num_users} matrix")
        for i, row in enumerate(self.weights):
            if row[i] != 0:
                raise GraphValidationError(f"self-demand weight on user {i + 1}")
            if any(w < 0 for w in row):
                raise GraphValidationError(f"negative weight in row {i + 1}")

    @classmethod
    def from_matrix(cls, weights: Sequence[Sequence[int]]) -> "WeightedCompressedGraph":
        rows = tuple(tuple(int(w) for w in row) for row in weights)
        return cls(num_users=len(rows), weights=rows)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.weights, dtype=np.int64)

    def weight(self, i: int, j: int) -> int:
        return self.weights[i - 1][j - 1]

    def links(self) -> list[tuple[int, int, int]]:
        return [
            (i + 1, j + 1, w)
            for i, row in enumerate(self.weights)
            for j, w in enumerate(row)
            if w > 0
        ]

    def to_digraph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(1, self.num_users + 1))
        for i, j, w in self.links():
            g.add_edge(i, j, weight=w)
        return g


@dataclass(frozen=True)
class UserCycle:
    nodes: tuple[int, ...]

    def __post_init__(self):
        if len(self.nodes) < 2:
            raise GraphValidationError(f"a user cycle needs at least 2 users, got {self.nodes}")
        if len(set(self.nodes)) != len(self.nodes):
            raise GraphValidationError(f"cycle users must be distinct: {self.nodes}")

    @property
    def length(self) -> int:
        return len(self.nodes)

    def links(self) -> list[tuple[int, int]]:
        k = len(self.nodes)
        return [(self.nodes[i], self.nodes[(i + 1) % k]) for i in range(k)]

    @classmethod
    def canonical(cls, nodes: Sequence[int]) -> "UserCycle":
        start = nodes.index(min(nodes))
        return cls(tuple(nodes[start:]) + tuple(nodes[:start]))


@dataclass(frozen=True)
class RemovePacket:
    packet: int


@dataclass(frozen=True)
class RemoveUser:
    user: int


@dataclass(frozen=True)
class RemoveWantLink:
    packet: int
    user: int


PruneOp = RemovePacket | RemoveUser | RemoveWantLink


def build_graph(num_users: int, have_sets: Sequence[Iterable[int]], want_sets: Sequence[Iterable[int]]) -> DemandGraph:
    if len(have_sets) != num_users or len(want_sets) != num_users:
        raise GraphValidationError(f"expected {num_users} have and want sets")
    have = tuple(frozenset(int(p) for p in s) for s in have_sets)
    want = tuple(frozenset(int(p) for p in s) for s in want_sets)
    all_ids = set().union(*have, *want)
    if any(p < 1 for p in all_ids):
        raise UnknownIdError(f"packet ids start at 1, got {sorted(p for p in all_ids if p < 1)}")
    num_packets = max(all_ids, default=0)
    return DemandGraph(num_users=num_users, num_packets=num_packets, have=have, want=want)


def relay_graph(weights: Sequence[Sequence[int]]) -> DemandGraph:
    """Relay demand graph: P_ij packets sourced at i, destined to j, ids in row-major order."""
    wcg = WeightedCompressedGraph.from_matrix(weights)
    n = wcg.num_users
    have: list[set[int]] = [set() for _ in range(n)]
    want: list[set[int]] = [set() for _ in range(n)]
    next_id = 1
    for i, j, w in wcg.links():
        for _ in range(w):
            have[i - 1].add(next_id)
            want[j - 1].add(next_id)
            next_id += 1
    return DemandGraph(num_users=n, num_packets=next_id - 1,
                       have=tuple(frozenset(s) for s in have),
                       want=tuple(frozenset(s) for s in want))


def bipartite_digraph(graph: DemandGraph) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(("u", n) for n in graph.users())
    g.add_nodes_from(("p", p) for p in graph.packets())
    for n in graph.users():
        for p in graph.have_of(n):
            g.add_edge(("u", n), ("p", p))
        for p in graph.want_of(n):
            g.add_edge(("p", p), ("u", n))
    return g


def is_acyclic(graph: DemandGraph) -> bool:
    return nx.is_directed_acyclic_graph(bipartite_digraph(graph))


def is_acyclic_digraph(wcg: WeightedCompressedGraph) -> bool:
    return nx.is_directed_acyclic_graph(wcg.to_digraph())


def prune_mapped(graph: DemandGraph, operations: Sequence[PruneOp]) -> tuple[DemandGraph, dict[int, int]]:
    """Apply pruning operations, drop packets nobody wants any more, compact packet ids.

    Returns the pruned graph and the old->new packet id map of the survivors.
    Removed users keep their id with empty have/want sets.
    """
    have = [set(s) for s in graph.have]
    want = [set(s) for s in graph.want]
    removed_packets: set[int] = set()
    for op in operations:
        if isinstance(op, RemovePacket):
            if op.packet not in graph.packets():
                raise UnknownIdError(f"unknown packet {op.packet}")
            removed_packets.add(op.packet)
        elif isinstance(op, RemoveUser):
            if op.user not in graph.users():
                raise UnknownIdError(f"unknown user {op.user}")
            have[op.user - 1].clear()
            want[op.user - 1].clear()
        elif isinstance(op, RemoveWantLink):
            if op.user not in graph.users() or op.packet not in graph.packets():
                raise UnknownIdError(f"unknown want link ({op.packet},{op.user})")
            if op.packet not in want[op.user - 1]:
                raise UnknownIdError(f"no want link from packet {op.packet} to user {op.user}")
            want[op.user - 1].discard(op.packet)
        else:
            raise TypeError(f"unsupported prune operation: {op!r}")

    still_wanted = set().union(*want) - removed_packets
    mapping = {old: new for new, old in enumerate(sorted(still_wanted), start=1)}
    new_have = tuple(frozenset(mapping[p] for p in s if p in mapping) for s in have)
    new_want = tuple(frozenset(mapping[p] for p in s if p in mapping) for s in want)
    pruned = DemandGraph(num_users=graph.num_users, num_packets=len(mapping), have=new_have, want=new_want)
    if pruned.num_packets != graph.num_packets:
        logger.debug(f"Graph: после прореживания осталось {pruned.num_packets} из {graph.num_packets} пакетов")
    return pruned, mapping


def prune(graph: DemandGraph, operations: Sequence[PruneOp]) -> DemandGraph:
    return prune_mapped(graph, operations)[0]


def compress(graph: DemandGraph) -> WeightedCompressedGraph:
    n = graph.num_users
    weights = tuple(
        tuple(len(graph.have_of(i) & graph.want_of(j)) if i != j else 0 for j in graph.users())
        for i in graph.users()
    )
    return WeightedCompressedGraph(num_users=n, weights=weights)


def enumerate_cycles(wcg: WeightedCompressedGraph, max_len: int | None = None) -> list[UserCycle]:
    """All simple directed cycles of at most max_len users (default N), canonical and sorted."""
    if max_len is None:
        max_len = wcg.num_users
    if max_len < 2:
        raise GraphValidationError(f"max_len must be at least 2, got {max_len}")
    found = {
        UserCycle.canonical(list(c))
        for c in nx.simple_cycles(wcg.to_digraph(), length_bound=max_len)
        if len(c) >= 2
    }
    return sorted(found, key=lambda c: (c.length, c.nodes))


def has_disjoint_cycles(wcg: WeightedCompressedGraph) -> tuple[bool, list[UserCycle]]:
    cycles = enumerate_cycles(wcg, max(2, wcg.num_users))
    usage = Counter(link for c in cycles for link in c.links())
    shared = sorted(link for link, count in usage.items() if count > 1)
    if shared:
        logger.debug(f"Graph: связи {shared} лежат более чем на одном цикле")
    return not shared, cycles


def unicast_packets(graph: DemandGraph) -> set[int]:
    return {p for p in graph.packets() if len(graph.wanters(p)) == 1}


def _format_ids(ids: Iterable[int]) -> str:
    ordered = sorted(ids)
    return ",".join(str(p) for p in ordered) if ordered else "-"


def _parse_ids(token: str, line_no: int) -> frozenset[int]:
    if token == "-":
        return frozenset()
    try:
        return frozenset(int(part) for part in token.split(","))
    except ValueError as e:
        raise GraphFormatError(f"line {line_no}: bad id list '{token}'") from e


def serialize_graph(graph: DemandGraph) -> str:
    lines = [f"users {graph.num_users} packets {graph.num_packets}"]
    for n in graph.users():
        lines.append(f"user {n} have {_format_ids(graph.have_of(n))} want {_format_ids(graph.want_of(n))}")
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> DemandGraph:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("#")]
    if not lines:
        raise GraphFormatError("empty graph text")
    header = lines[0].split()
    if len(header) != 4 or header[0] != "users" or header[2] != "packets":
        raise GraphFormatError(f"bad header: '{lines[0]}'")
    try:
        num_users, num_packets = int(header[1]), int(header[3])
    except ValueError as e:
        raise GraphFormatError(f"bad header: '{lines[0]}'") from e
    have: dict[int, frozenset[int]] = {}
    want: dict[int, frozenset[int]] = {}
    for line_no, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != 6 or parts[0] != "user" or parts[2] != "have" or parts[4] != "want":
            raise GraphFormatError(f"line {line_no}: expected 'user n have ... want ...'")
        try:
            user = int(parts[1])
        except ValueError as e:
            raise GraphFormatError(f"line {line_no}: bad user id '{parts[1]}'") from e
        if user not in range(1, num_users + 1) or user in have:
            raise GraphFormatError(f"line {line_no}: unexpected user {user}")
        have[user] = _parse_ids(parts[3], line_no)
        want[user] = _parse_ids(parts[5], line_no)
    missing = [n for n in range(1, num_users + 1) if n not in have]
    if missing:
        raise GraphFormatError(f"missing lines for users {missing}")
    return DemandGraph(
        num_users=num_users,
        num_packets=num_packets,
        have=tuple(have[n] for n in range(1, num_users + 1)),
        want=tuple(want[n] for n in range(1, num_users + 1)),
    )


def load_graph(path: str | Path) -> DemandGraph:
    text = Path(path).read_text(encoding="utf-8")
    graph = parse_graph(text)
    logger.info(f"Graph: загружен {path} ({graph.num_users} пользователей, {graph.num_packets} пакетов)")
    return graph


def parse_messages(text: str, num_packets: int | None = None) -> list[frozenset[int]]:
    """One XOR message per line, packet ids separated by commas or spaces; ids checked against num_packets if given."""
    messages = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            ids = frozenset(int(tok) for tok in line.replace(",", " ").split())
        except ValueError as e:
            raise GraphFormatError(f"line {line_no}: bad message '{line}'") from e
        if any(p < 1 for p in ids):
            raise GraphFormatError(f"line {line_no}: packet ids start at 1")
        if num_packets is not None and max(ids) > num_packets:
            raise UnknownIdError(f"line {line_no}: packet {max(ids)} outside 1..{num_packets}")
        messages.append(ids)
    return messages
