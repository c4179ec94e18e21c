"""Coding actions over traffic types: direct, k-cycle, double-cycle and custom XOR codes.

A packet reference is a pair (traffic type index, slot): slot s is the s-th
head-of-line packet of that type at execution time. Messages are sets of
packet references that the station XORs together.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from index_coding import config
from index_coding.modules.demand_graph import (
    DemandGraph,
    UserCycle,
    WeightedCompressedGraph,
    enumerate_cycles,
)
from index_coding.modules.gf2 import GF2Basis, mask_of

logger = logging.getLogger(__name__)

PacketRef = tuple[int, int]


class ActionError(ValueError):
    pass


class LegMismatchError(ActionError):
    pass


class PatternMismatchError(ActionError):
    pass


class DecodeError(ActionError):
    pass


class TrafficSpecError(ValueError):
    pass


class ActionKind(str, Enum):
    DIRECT = "direct"
    K_CYCLE = "k-cycle"
    DOUBLE_CYCLE = "double-cycle"
    CUSTOM_LINEAR = "custom-linear"


@dataclass(frozen=True)
class TrafficType:
    dest_set: frozenset[int]
    side_set: frozenset[int] = frozenset()

    @property
    def is_unicast(self) -> bool:
        return len(self.dest_set) == 1

    @property
    def destination(self) -> int:
        return next(iter(self.dest_set))


@dataclass(frozen=True)
class TrafficSpec:
    num_users: int
    types: tuple[TrafficType, ...]
    rates: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.types:
            raise TrafficSpecError("a traffic spec needs at least one type")
        users = set(range(1, self.num_users + 1))
        for m, t in enumerate(self.types):
            if not t.dest_set:
                raise TrafficSpecError(f"type {m} has an empty destination set")
            if t.dest_set & t.side_set:
                raise TrafficSpecError(f"type {m}: destination and side sets overlap")
            if not (t.dest_set | t.side_set) <= users:
                raise TrafficSpecError(f"type {m} references users outside 1..{self.num_users}")
        if self.rates is not None:
            if len(self.rates) != len(self.types):
                raise TrafficSpecError(f"expected {len(self.types)} rates, got {len(self.rates)}")
            if any(not 0.0 <= r <= 1.0 for r in self.rates):
                raise TrafficSpecError("rates must lie in [0, 1] packets/slot")

    @property
    def num_types(self) -> int:
        return len(self.types)

    def with_rates(self, rates: Sequence[float]) -> "TrafficSpec":
        return replace(self, rates=tuple(float(r) for r in rates))

    def leg_types(self, source: int, dest: int) -> tuple[int, ...]:
        """Unicast types a cycle leg source->dest may carry: dest wants, source has."""
        return tuple(
            m for m, t in enumerate(self.types)
            if t.is_unicast and t.destination == dest and source in t.side_set
        )


@dataclass(frozen=True)
class CodingAction:
    id: int
    kind: ActionKind
    frame_len: int
    clearance: tuple[int, ...]
    plan: tuple[frozenset[PacketRef], ...]
    legs: tuple[int, ...] = ()
    users: tuple[int, ...] = ()
    uplink_slots: int = 0

    def __post_init__(self):
        if self.frame_len < 1:
            raise ActionError(f"action {self.id}: frame length must be positive")
        if any(mu < 0 for mu in self.clearance):
            raise ActionError(f"action {self.id}: negative clearance")
        if len(self.plan) + self.uplink_slots != self.frame_len:
            raise ActionError(f"action {self.id}: plan has {len(self.plan)} messages for frame {self.frame_len}")
        downlink = self.frame_len - self.uplink_slots
        if self.kind is ActionKind.K_CYCLE and (downlink != len(self.users) - 1 or sum(self.clearance) != len(self.users)):
            raise ActionError(f"action {self.id}: a {len(self.users)}-cycle must clear K packets in K-1 slots")
        if self.kind is ActionKind.DOUBLE_CYCLE and (downlink != 1 or sum(self.clearance) != 3):
            raise ActionError(f"action {self.id}: a double-cycle clears 3 packets in 1 slot")

    @property
    def leg_candidates(self) -> tuple[tuple[int, ...], ...]:
        return tuple((m,) for m in self.legs)

    @property
    def efficiency(self) -> float:
        return sum(self.clearance) / self.frame_len

    @property
    def label(self) -> str:
        if self.kind is ActionKind.K_CYCLE:
            return f"{len(self.users)}-cycle"
        return self.kind.value

    def cleared_refs(self) -> list[PacketRef]:
        return sorted(set().union(*self.plan)) if self.plan else []

    def with_id(self, action_id: int) -> "CodingAction":
        return replace(self, id=action_id)


@dataclass(frozen=True)
class ActionTemplate:
    """A cycle action whose per-leg traffic type is chosen at scheduling time."""
    id: int
    kind: ActionKind
    users: tuple[int, ...]
    leg_candidates: tuple[tuple[int, ...], ...]
    uplink_slots: int = 0

    @property
    def frame_len(self) -> int:
        return len(self.users) - 1 + self.uplink_slots

    @property
    def label(self) -> str:
        return f"{len(self.users)}-cycle"

    def bind(self, spec: TrafficSpec, backlogs: Sequence[float]) -> CodingAction:
        """Bind every leg to its eligible type with the largest backlog (ties: smallest index)."""
        legs = [max(cands, key=lambda m: (backlogs[m], -m)) for cands in self.leg_candidates]
        action = k_cycle_action(spec, UserCycle(self.users), legs, action_id=self.id)
        return _with_uplink(action, self.uplink_slots) if self.uplink_slots else action


AnyAction = CodingAction | ActionTemplate


@dataclass(frozen=True)
class ActionOptions:
    kinds: frozenset[str] = frozenset({"direct", "cycle", "double-cycle"})
    max_cycle_len: int = 3
    relay_mode: bool = False
    template: bool = False

    @classmethod
    def parse_kinds(cls, text: str) -> frozenset[str]:
        kinds = frozenset(k.strip() for k in text.split(",") if k.strip())
        unknown = kinds - {"direct", "cycle", "double-cycle"}
        if unknown:
            raise ActionError(f"unknown action kinds: {sorted(unknown)}")
        return kinds | {"direct"}


@dataclass(frozen=True)
class ActionSet:
    spec: TrafficSpec
    actions: tuple[AnyAction, ...]
    provenance: ActionOptions = field(default_factory=ActionOptions)

    def __post_init__(self):
        if not self.actions:
            raise ActionError("an action set cannot be empty")
        direct = {a.legs[0] for a in self.actions if isinstance(a, CodingAction) and a.kind is ActionKind.DIRECT}
        missing = set(range(self.spec.num_types)) - direct
        if missing:
            raise ActionError(f"action set lacks direct actions for types {sorted(missing)}")

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def has_templates(self) -> bool:
        return any(isinstance(a, ActionTemplate) for a in self.actions)

    @property
    def t_max(self) -> int:
        return max(a.frame_len for a in self.actions)

    def direct_only(self) -> "ActionSet":
        direct = [a for a in self.actions if a.kind is ActionKind.DIRECT]
        return ActionSet(
            spec=self.spec,
            actions=tuple(replace(a, id=i) for i, a in enumerate(direct)),
            provenance=replace(self.provenance, kinds=frozenset({"direct"})),
        )

    def concrete(self) -> "ActionSet":
        """Same options with every template expanded to all its leg bindings."""
        if not self.has_templates:
            return self
        return generate_action_set(self.spec, replace(self.provenance, template=False))


def direct_action(spec: TrafficSpec, type_index: int, action_id: int = 0) -> CodingAction:
    if not 0 <= type_index < spec.num_types:
        raise ActionError(f"type index {type_index} outside 0..{spec.num_types - 1}")
    clearance = [0] * spec.num_types
    clearance[type_index] = 1
    return CodingAction(
        id=action_id,
        kind=ActionKind.DIRECT,
        frame_len=1,
        clearance=tuple(clearance),
        plan=(frozenset({(type_index, 0)}),),
        legs=(type_index,),
    )


def _leg_refs(leg_types: Sequence[int]) -> list[PacketRef]:
    seen: dict[int, int] = {}
    refs = []
    for m in leg_types:
        refs.append((m, seen.get(m, 0)))
        seen[m] = seen.get(m, 0) + 1
    return refs


def k_cycle_action(spec: TrafficSpec, cycle: UserCycle, leg_types: Sequence[int], action_id: int = 0) -> CodingAction:
    """Leg k carries a packet user n_k has and n_{k+1} wants; messages X_k xor X_{k+1}."""
    k = cycle.length
    if len(leg_types) != k:
        raise LegMismatchError(f"cycle of {k} users needs {k} leg types, got {len(leg_types)}")
    for idx, ((src, dst), m) in enumerate(zip(cycle.links(), leg_types)):
        if not 0 <= m < spec.num_types:
            raise LegMismatchError(f"leg {idx}: unknown type {m}")
        t = spec.types[m]
        if src not in t.side_set or dst not in t.dest_set:
            raise LegMismatchError(f"leg {idx}: type {m} is not held by user {src} and wanted by user {dst}")
    refs = _leg_refs(leg_types)
    clearance = [0] * spec.num_types
    for m in leg_types:
        clearance[m] += 1
    plan = tuple(frozenset({refs[i], refs[i + 1]}) for i in range(k - 1))
    return CodingAction(
        id=action_id,
        kind=ActionKind.K_CYCLE,
        frame_len=k - 1,
        clearance=tuple(clearance),
        plan=plan,
        legs=tuple(leg_types),
        users=cycle.nodes,
    )


def _double_cycle_users(spec: TrafficSpec, types: Sequence[int]) -> tuple[int, ...] | None:
    if len(types) != 3 or len(set(types)) != 3:
        return None
    if any(not 0 <= m < spec.num_types for m in types):
        return None
    ts = [spec.types[m] for m in types]
    if any(not t.is_unicast for t in ts):
        return None
    users = tuple(t.destination for t in ts)
    if len(set(users)) != 3:
        return None
    for a, ta in enumerate(ts):
        for b, tb in enumerate(ts):
            if a != b and users[a] not in tb.side_set:
                return None
    return users


def double_cycle_action(spec: TrafficSpec, types: Sequence[int], action_id: int = 0) -> CodingAction:
    """One message A xor B xor C; each of three users wants one packet and has the other two."""
    users = _double_cycle_users(spec, types)
    if users is None:
        raise PatternMismatchError(f"types {list(types)} do not form a double-cycle pattern")
    clearance = [0] * spec.num_types
    for m in types:
        clearance[m] += 1
    return CodingAction(
        id=action_id,
        kind=ActionKind.DOUBLE_CYCLE,
        frame_len=1,
        clearance=tuple(clearance),
        plan=(frozenset((m, 0) for m in types),),
        legs=tuple(types),
        users=users,
    )


def custom_linear_action(spec: TrafficSpec, messages: Sequence[Iterable[PacketRef]], action_id: int = 0) -> CodingAction:
    plan = tuple(frozenset(msg) for msg in messages)
    if not plan or any(not msg for msg in plan):
        raise ActionError("a custom code needs at least one non-empty message")
    refs = sorted(set().union(*plan))
    clearance = [0] * spec.num_types
    for m, _ in refs:
        if not 0 <= m < spec.num_types:
            raise ActionError(f"unknown type {m} in custom code")
        clearance[m] += 1
    return CodingAction(
        id=action_id,
        kind=ActionKind.CUSTOM_LINEAR,
        frame_len=len(plan),
        clearance=tuple(clearance),
        plan=plan,
        legs=tuple(m for m, _ in refs),
    )


def _with_uplink(action: CodingAction, uplink: int) -> CodingAction:
    return replace(action, frame_len=action.frame_len + uplink, uplink_slots=uplink)


def _leg_graph(spec: TrafficSpec) -> tuple[WeightedCompressedGraph, dict[tuple[int, int], tuple[int, ...]]]:
    n = spec.num_users
    candidates = {
        (i, j): spec.leg_types(i, j)
        for i in range(1, n + 1) for j in range(1, n + 1) if i != j
    }
    weights = [[len(candidates.get((i, j), ())) for j in range(1, n + 1)] for i in range(1, n + 1)]
    return WeightedCompressedGraph.from_matrix(weights), candidates


def _kind_rank(action: AnyAction) -> int:
    if action.kind is ActionKind.DIRECT:
        return 0
    if action.kind is ActionKind.K_CYCLE:
        return len(action.users) - 1
    return 10_000


def _sort_key(action: AnyAction) -> tuple:
    if isinstance(action, ActionTemplate):
        return (_kind_rank(action), tuple(c[0] for c in action.leg_candidates), action.users)
    return (_kind_rank(action), action.legs, action.users)


def generate_action_set(spec: TrafficSpec, options: ActionOptions | None = None) -> ActionSet:
    options = options or ActionOptions()
    found: list[AnyAction] = [direct_action(spec, m) for m in range(spec.num_types)]

    if "cycle" in options.kinds and spec.num_users >= 2 and options.max_cycle_len >= 2:
        wcg, candidates = _leg_graph(spec)
        for cycle in enumerate_cycles(wcg, min(options.max_cycle_len, max(2, spec.num_users))):
            leg_cands = tuple(candidates[link] for link in cycle.links())
            if options.template:
                found.append(ActionTemplate(id=0, kind=ActionKind.K_CYCLE, users=cycle.nodes, leg_candidates=leg_cands))
            else:
                found.extend(k_cycle_action(spec, cycle, legs) for legs in itertools.product(*leg_cands))

    if "double-cycle" in options.kinds:
        for combo in itertools.combinations(range(spec.num_types), 3):
            if _double_cycle_users(spec, combo) is not None:
                found.append(double_cycle_action(spec, combo))

    found.sort(key=_sort_key)
    actions: list[AnyAction] = []
    for idx, action in enumerate(found):
        if options.relay_mode:
            if isinstance(action, ActionTemplate):
                action = replace(action, uplink_slots=len(action.users))
            else:
                action = _with_uplink(action, sum(action.clearance))
        actions.append(replace(action, id=idx))
    logger.debug(f"Actions: сгенерировано {len(actions)} действий (kinds={sorted(options.kinds)}, "
                 f"max_cycle_len={options.max_cycle_len}, relay={options.relay_mode}, template={options.template})")
    return ActionSet(spec=spec, actions=tuple(actions), provenance=options)


def random_payloads(refs: Iterable[PacketRef], rng: np.random.Generator,
                    bits: int = config.DEFAULT_PAYLOAD_BITS) -> dict[PacketRef, np.ndarray]:
    return {ref: rng.integers(0, 2, size=bits, dtype=np.uint8) for ref in refs}


def broadcast_messages(action: CodingAction, payloads: Mapping[PacketRef, np.ndarray]) -> list[np.ndarray]:
    messages = []
    for msg in action.plan:
        refs = sorted(msg)
        acc = payloads[refs[0]].copy()
        for ref in refs[1:]:
            np.bitwise_xor(acc, payloads[ref], out=acc)
        messages.append(acc)
    return messages


def execute_and_decode(
    action: CodingAction,
    spec: TrafficSpec,
    payloads: Mapping[PacketRef, np.ndarray],
) -> dict[int, dict[PacketRef, np.ndarray]]:
    """Broadcast the plan and let every destination decode from messages plus side information."""
    refs = action.cleared_refs()
    missing = [ref for ref in refs if ref not in payloads]
    if missing:
        raise ActionError(f"action {action.id}: no payload for packets {missing} (distinct packets required)")
    sizes = {payloads[ref].shape[0] for ref in refs}
    if len(sizes) > 1:
        raise ActionError(f"action {action.id}: payload lengths differ {sorted(sizes)}")
    bits = sizes.pop()
    index = {ref: i for i, ref in enumerate(refs)}
    sent = broadcast_messages(action, payloads)
    zero = np.zeros(bits, dtype=np.uint8)

    decoded: dict[int, dict[PacketRef, np.ndarray]] = {}
    for user in range(1, spec.num_users + 1):
        wanted = [ref for ref in refs if user in spec.types[ref[0]].dest_set]
        if not wanted:
            continue
        basis = GF2Basis()
        for msg, payload in zip(action.plan, sent):
            basis.add(mask_of(index[ref] for ref in msg), payload)
        for ref in refs:
            if user in spec.types[ref[0]].side_set:
                basis.add(1 << index[ref], payloads[ref])
        recovered = {}
        for ref in wanted:
            payload = basis.solve(1 << index[ref], zero)
            if payload is None:
                raise DecodeError(f"action {action.id}: user {user} cannot decode packet {ref}")
            recovered[ref] = payload
        decoded[user] = recovered
    return decoded


def verify_linear_code(graph: DemandGraph, messages: Sequence[Iterable[int]]) -> bool:
    """True iff every wanted packet lies in the GF(2) span of the messages plus the user's side info."""
    rows = [mask_of(p - 1 for p in msg) for msg in messages]
    for user in graph.users():
        wanted = graph.want_of(user)
        if not wanted:
            continue
        basis = GF2Basis()
        for row in rows:
            basis.add(row)
        for q in graph.have_of(user):
            basis.add(1 << (q - 1))
        if not all(basis.in_span(1 << (p - 1)) for p in wanted):
            logger.debug(f"Actions: пользователь {user} не может декодировать все пакеты {sorted(wanted)}")
            return False
    return True


def graph_traffic_spec(graph: DemandGraph) -> TrafficSpec:
    """One traffic type per packet: type p-1 is wanted by the packet's wanters, held by its holders."""
    return TrafficSpec(
        num_users=graph.num_users,
        types=tuple(TrafficType(dest_set=graph.wanters(p), side_set=graph.holders(p)) for p in graph.packets()),
    )


def plan_messages(actions: Sequence[CodingAction]) -> list[set[int]]:
    """Messages of a static plan over graph_traffic_spec, as packet-id subsets."""
    return [{m + 1 for m, _ in msg} for action in actions for msg in action.plan]


def induced_demand_graph(action: CodingAction, spec: TrafficSpec) -> tuple[DemandGraph, list[PacketRef]]:
    """Demand graph over the packets an action clears; packet i+1 is refs[i]."""
    refs = action.cleared_refs()
    have = [frozenset(i + 1 for i, (m, _) in enumerate(refs) if n in spec.types[m].side_set)
            for n in range(1, spec.num_users + 1)]
    want = [frozenset(i + 1 for i, (m, _) in enumerate(refs) if n in spec.types[m].dest_set)
            for n in range(1, spec.num_users + 1)]
    graph = DemandGraph(num_users=spec.num_users, num_packets=len(refs), have=tuple(have), want=tuple(want))
    return graph, refs


def action_packet_messages(action: CodingAction) -> list[set[int]]:
    index = {ref: i + 1 for i, ref in enumerate(action.cleared_refs())}
    return [{index[ref] for ref in msg} for msg in action.plan]


def _format_plan(action: CodingAction) -> str:
    msgs = ["{" + ",".join(f"{m}#{s}" for m, s in sorted(msg)) + "}" for msg in action.plan]
    return "[" + ",".join(msgs) + "]"


def format_action(action: AnyAction) -> str:
    if isinstance(action, ActionTemplate):
        cands = ",".join("[" + ",".join(str(m) for m in c) + "]" for c in action.leg_candidates)
        return f"{action.id} {action.label} T={action.frame_len} users={list(action.users)} legs=[{cands}]"
    mu = ",".join(str(v) for v in action.clearance)
    return f"{action.id} {action.label} T={action.frame_len} mu=[{mu}] plan={_format_plan(action)}"


def dump_action_set(action_set: ActionSet) -> str:
    return "\n".join(format_action(a) for a in action_set.actions) + "\n"
