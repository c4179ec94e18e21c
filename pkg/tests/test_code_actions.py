import numpy as np
import pytest

from index_coding.modules import presets
from index_coding.modules.code_actions import (
    ActionError,
    ActionKind,
    ActionOptions,
    ActionSet,
    ActionTemplate,
    CodingAction,
    DecodeError,
    LegMismatchError,
    PatternMismatchError,
    TrafficSpec,
    TrafficSpecError,
    TrafficType,
    action_packet_messages,
    custom_linear_action,
    direct_action,
    double_cycle_action,
    dump_action_set,
    execute_and_decode,
    format_action,
    generate_action_set,
    graph_traffic_spec,
    induced_demand_graph,
    k_cycle_action,
    random_payloads,
    verify_linear_code,
)
from index_coding.modules.demand_graph import UserCycle, parse_messages


def test_workload_layout(workload):
    assert workload.num_types == 12
    assert presets.three_user_type_index(2, "lower") == 5
    assert workload.types[5] == TrafficType(dest_set=frozenset({2}), side_set=frozenset({1}))
    assert workload.leg_types(1, 2) == (5, 7)
    assert workload.leg_types(3, 1) == (2, 3)


def test_workload_rates_split_per_user():
    spec = presets.three_user_workload(0.4)
    assert spec.rates == pytest.approx([0.1] * 12)


def test_traffic_spec_validation():
    with pytest.raises(TrafficSpecError):
        TrafficSpec(num_users=2, types=(TrafficType(frozenset({1}), frozenset({1})),))
    with pytest.raises(TrafficSpecError):
        TrafficSpec(num_users=2, types=(TrafficType(frozenset({3})),))
    with pytest.raises(TrafficSpecError):
        TrafficSpec(num_users=2, types=(TrafficType(frozenset({1})),), rates=(1.5,))
    with pytest.raises(TrafficSpecError):
        TrafficSpec(num_users=2, types=())


def test_concrete_action_set_counts(concrete_actions):
    kinds = [a.kind for a in concrete_actions.actions]
    assert len(concrete_actions) == 41
    assert kinds.count(ActionKind.DIRECT) == 12
    assert sum(1 for a in concrete_actions.actions if a.label == "2-cycle") == 12
    assert sum(1 for a in concrete_actions.actions if a.label == "3-cycle") == 16
    assert kinds.count(ActionKind.DOUBLE_CYCLE) == 1
    assert [a.id for a in concrete_actions.actions] == list(range(41))
    assert concrete_actions.t_max == 2


def test_action_order_is_stable(concrete_actions):
    actions = concrete_actions.actions
    assert all(actions[m].kind is ActionKind.DIRECT and actions[m].legs == (m,) for m in range(12))
    assert actions[12].legs == (5, 1)
    assert actions[24].legs == (5, 10, 2)
    assert actions[40].legs == (3, 7, 11)


def test_template_action_set(template_actions):
    assert len(template_actions) == 18
    assert template_actions.has_templates
    first = template_actions.actions[12]
    assert isinstance(first, ActionTemplate)
    assert first.users == (1, 2)
    assert first.leg_candidates == ((5, 7), (1, 3))
    assert len(template_actions.concrete()) == 41


def test_template_binding(template_actions, workload):
    template = template_actions.actions[12]
    assert template.bind(workload, [0.0] * 12).legs == (5, 1)
    backlogs = [0.0] * 12
    backlogs[7] = 3.0
    backlogs[3] = 2.0
    bound = template.bind(workload, backlogs)
    assert bound.legs == (7, 3)
    assert bound.id == template.id


def test_kind_filter_and_cycle_cap(workload):
    direct = generate_action_set(workload, ActionOptions(kinds=ActionOptions.parse_kinds("direct")))
    assert len(direct) == 12
    two = generate_action_set(workload, ActionOptions(max_cycle_len=2))
    assert len(two) == 25
    with pytest.raises(ActionError):
        ActionOptions.parse_kinds("cycle,triangle")


def test_direct_only_renumbers(concrete_actions):
    direct = concrete_actions.direct_only()
    assert len(direct) == 12
    assert [a.id for a in direct.actions] == list(range(12))


def test_action_set_requires_direct_actions(workload):
    with pytest.raises(ActionError):
        ActionSet(spec=workload, actions=(direct_action(workload, 0),))


def test_relay_mode_charges_uplink(workload):
    relay = generate_action_set(workload, ActionOptions(relay_mode=True))
    three = relay.actions[24]
    assert three.uplink_slots == 3
    assert three.frame_len == 5
    assert relay.actions[0].frame_len == 2
    assert relay.actions[40].frame_len == 4


def test_invalid_cycle_legs(workload):
    with pytest.raises(LegMismatchError):
        k_cycle_action(workload, UserCycle((1, 2)), [1, 5])
    with pytest.raises(LegMismatchError):
        k_cycle_action(workload, UserCycle((1, 2, 3)), [5, 10])


def test_double_cycle_pattern(workload):
    action = double_cycle_action(workload, [3, 7, 11])
    assert action.frame_len == 1
    assert action.efficiency == 3.0
    with pytest.raises(PatternMismatchError):
        double_cycle_action(workload, [3, 7, 10])


def test_action_invariants():
    with pytest.raises(ActionError):
        CodingAction(id=0, kind=ActionKind.DIRECT, frame_len=2, clearance=(1,), plan=(frozenset({(0, 0)}),))
    with pytest.raises(ActionError):
        CodingAction(id=0, kind=ActionKind.DIRECT, frame_len=1, clearance=(-1,), plan=(frozenset({(0, 0)}),))


def test_three_cycle_decodes(workload, rng):
    action = k_cycle_action(workload, UserCycle((1, 2, 3)), [5, 10, 2])
    assert action.frame_len == 2
    assert sum(action.clearance) == 3
    payloads = random_payloads(action.cleared_refs(), rng, 64)
    decoded = execute_and_decode(action, workload, payloads)
    assert np.array_equal(decoded[1][(2, 0)], payloads[(2, 0)])
    assert np.array_equal(decoded[2][(5, 0)], payloads[(5, 0)])
    assert np.array_equal(decoded[3][(10, 0)], payloads[(10, 0)])


def test_every_generated_action_decodes(concrete_actions, workload, rng):
    for action in concrete_actions.actions:
        payloads = random_payloads(action.cleared_refs(), rng, 32)
        decoded = execute_and_decode(action, workload, payloads)
        assert sum(len(v) for v in decoded.values()) == sum(action.clearance)


def test_truncated_plan_fails_to_decode(workload, rng):
    full = k_cycle_action(workload, UserCycle((1, 2, 3)), [5, 10, 2])
    broken = custom_linear_action(workload, full.plan[:1])
    payloads = random_payloads(broken.cleared_refs(), rng, 16)
    with pytest.raises(DecodeError, match="user 3"):
        execute_and_decode(broken, workload, payloads)


def test_decode_requires_all_payloads(workload, rng):
    action = k_cycle_action(workload, UserCycle((1, 2)), [5, 1])
    payloads = random_payloads([(5, 0)], rng, 8)
    with pytest.raises(ActionError):
        execute_and_decode(action, workload, payloads)


def test_two_user_swap_cycle_refs():
    spec = TrafficSpec(
        num_users=2,
        types=(TrafficType(frozenset({1}), frozenset({2})), TrafficType(frozenset({2}), frozenset({1}))),
    )
    action = k_cycle_action(spec, UserCycle((1, 2)), [1, 0])
    assert action.cleared_refs() == [(0, 0), (1, 0)]


def test_graph_traffic_spec(fig1):
    spec = graph_traffic_spec(fig1)
    assert spec.num_types == 5
    assert spec.types[0].dest_set == frozenset({1, 2})
    assert spec.types[4] == TrafficType(dest_set=frozenset({3}), side_set=frozenset({1}))


def test_verify_fig5b_code(fig5b, fixtures_dir):
    assert verify_linear_code(fig5b, presets.FIG5B_MESSAGES)
    assert not verify_linear_code(fig5b, list(presets.FIG5B_MESSAGES)[:-1])
    uncoded = parse_messages((fixtures_dir / "fig5b_uncoded.messages").read_text())
    assert verify_linear_code(fig5b, uncoded)


def test_induced_graph_round_trip(workload):
    action = k_cycle_action(workload, UserCycle((1, 3, 2)), [9, 6, 1])
    graph, refs = induced_demand_graph(action, workload)
    assert graph.num_packets == 3
    assert refs == action.cleared_refs()
    assert verify_linear_code(graph, action_packet_messages(action))


def test_format_action(concrete_actions, template_actions):
    assert format_action(concrete_actions.actions[0]) == "0 direct T=1 mu=[1,0,0,0,0,0,0,0,0,0,0,0] plan=[{0#0}]"
    assert format_action(template_actions.actions[12]) == "12 2-cycle T=1 users=[1, 2] legs=[[5,7],[1,3]]"
    dump = dump_action_set(concrete_actions)
    assert dump.count("\n") == 41
    assert "40 double-cycle T=1" in dump


def test_codec_agrees_with_span_check(concrete_actions, workload, rng):
    actions = [a for a in concrete_actions.actions if a.kind is not ActionKind.DIRECT]
    for _ in range(1000):
        action = actions[int(rng.integers(len(actions)))]
        if rng.random() < 0.3 and len(action.plan[0]) > 1:
            first, *rest = action.plan
            action = custom_linear_action(workload, [sorted(first)[1:], *rest])
        bits = int(rng.choice([1, 8, 128, 1024]))
        payloads = random_payloads(action.cleared_refs(), rng, bits)
        graph, _ = induced_demand_graph(action, workload)
        decodable = verify_linear_code(graph, action_packet_messages(action))
        try:
            decoded = execute_and_decode(action, workload, payloads)
        except DecodeError:
            assert not decodable
            continue
        assert decodable
        for recovered in decoded.values():
            for ref, payload in recovered.items():
                assert np.array_equal(payload, payloads[ref])
