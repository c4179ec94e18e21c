import logging

import numpy as np
import pytest

from index_coding.modules import presets
from index_coding.modules.clearance_solver import (
    HypothesisError,
    ShapeError,
    SizeCapError,
    SolverError,
    UserCountError,
    acyclic_subgraph_bound,
    best_available_bound,
    disjoint_cycle_clearance,
    greedy_cyclic_plan,
    optimal_cyclic_plan,
    relay_total_slots,
    row_column_structure_check,
    solve_static,
    three_user_relay_clearance,
    two_user_clearance,
)
from index_coding.modules.code_actions import verify_linear_code
from index_coding.modules.demand_graph import UserCycle, build_graph, relay_graph


def small_graph(rng: np.random.Generator):
    n = int(rng.integers(2, 4))
    p = int(rng.integers(1, 6))
    have = [set() for _ in range(n)]
    want = [set() for _ in range(n)]
    for packet in range(1, p + 1):
        users = rng.permutation(n)
        k = int(rng.integers(1, n + 1))
        for u in users[:k]:
            want[u].add(packet)
        for u in users[k:]:
            if rng.random() < 0.6:
                have[u].add(packet)
    return build_graph(n, have, want)


def multicast_graph(rng: np.random.Generator):
    n = int(rng.integers(2, 5))
    p = int(rng.integers(1, 6))
    have = [set() for _ in range(n)]
    want = [set() for _ in range(n)]
    for packet in range(1, p + 1):
        users = rng.permutation(n)
        k = int(rng.integers(1, n))
        for u in users[:k]:
            want[u].add(packet)
        for u in users[k:]:
            if rng.random() < 0.5:
                have[u].add(packet)
    return build_graph(n, have, want)


def random_relay_weights(rng: np.random.Generator, n: int, max_packets: int) -> list[list[int]]:
    while True:
        w = rng.integers(0, 3, size=(n, n))
        np.fill_diagonal(w, 0)
        if 0 < w.sum() <= max_packets:
            return w.tolist()


def row_structured_weights(rng: np.random.Generator, n: int) -> list[list[int]]:
    w = np.zeros((n, n), dtype=int)
    for i in range(n):
        j = int(rng.integers(0, n))
        if j != i:
            w[i, j] = int(rng.integers(1, 3))
    if w.sum() == 0:
        w[0, 1] = 1
    return w.tolist()


def test_swap_needs_one_slot(swap):
    result = solve_static(swap)
    assert result.solver == "two-user"
    assert (result.lower_bound, result.plan_slots, result.exact) == (1, 1, True)
    assert result.messages() == [{1, 2}]


def test_fig1_is_already_acyclic(fig1):
    result = solve_static(fig1)
    assert result.plan_slots == 5
    assert acyclic_subgraph_bound(fig1) == 5
    assert result.exact


def test_fig4a_disjoint_cycles(fig4a):
    result = solve_static(fig4a)
    assert result.solver == "disjoint"
    assert result.lower_bound == result.plan_slots == 39
    assert relay_total_slots(result, fig4a) == 87
    assert verify_linear_code(fig4a, result.messages())


def test_fig4a_exact_bound_is_capped(fig4a):
    with pytest.raises(SizeCapError):
        acyclic_subgraph_bound(fig4a, "exact")
    with pytest.raises(SizeCapError):
        optimal_cyclic_plan(fig4a)


def test_bound_solver_falls_back_to_greedy(fig4a, caplog):
    with caplog.at_level(logging.WARNING):
        result = solve_static(fig4a, "bound")
    assert result.plan is None and result.plan_slots is None
    assert result.lower_bound <= 39
    assert not result.exact
    assert "greedy" in caplog.text
    assert result.summary().startswith(f"lower_bound={result.lower_bound} plan_slots=- exact=false")


def test_two_user_clearance():
    graph = build_graph(2, [{1, 2, 3}, {4}], [{4, 5, 6}, {1, 2, 3, 5}])
    result = two_user_clearance(graph)
    assert result.plan_slots == 5
    assert verify_linear_code(graph, result.messages())
    with pytest.raises(UserCountError):
        two_user_clearance(presets.fig1_graph())


def test_relay3_clockwise_residual():
    result = three_user_relay_clearance([[0, 5, 1], [2, 0, 4], [3, 2, 0]])
    assert result.plan_slots == 10
    assert result.lower_bound == 10


def test_relay3_counter_clockwise_residual():
    weights = [[0, 0, 2], [3, 0, 0], [0, 2, 0]]
    result = three_user_relay_clearance(weights)
    assert result.plan_slots == 5
    assert [a.users for a in result.plan[:2]] == [(1, 3, 2), (1, 3, 2)]
    assert verify_linear_code(relay_graph(weights), result.messages())


def test_relay3_rejects_bad_shapes():
    with pytest.raises(ShapeError):
        three_user_relay_clearance([[0, 1], [1, 0]])
    with pytest.raises(ShapeError):
        three_user_relay_clearance([[1, 0, 0], [0, 0, 0], [0, 0, 0]])


def test_disjoint_hypothesis_checked(fig5a):
    with pytest.raises(HypothesisError):
        disjoint_cycle_clearance(fig5a)


def test_fig5a_cycle_choice_matters(fig5a):
    assert acyclic_subgraph_bound(fig5a) == 5
    assert optimal_cyclic_plan(fig5a).plan_slots == 5
    assert greedy_cyclic_plan(fig5a).plan_slots == 5
    assert greedy_cyclic_plan(fig5a, prefer=(2, 3, 4)).plan_slots == 6
    assert optimal_cyclic_plan(fig5a, forced_cycle=UserCycle((2, 3, 4))).plan_slots == 6


def test_fig5b_cyclic_codes_miss_the_bound(fig5b):
    result = solve_static(fig5b)
    assert result.solver == "exhaustive"
    assert result.lower_bound == 7
    assert result.plan_slots == 8
    assert not result.exact
    assert verify_linear_code(fig5b, result.messages())


def test_fig5b_short_cycles_only(fig5b):
    result = solve_static(fig5b, "exhaustive", max_cycle_len=3)
    assert result.plan_slots >= 8


def test_greedy_fallback_for_large_graphs(caplog):
    weights = [[0 if i == j else 2 for j in range(4)] for i in range(4)]
    graph = relay_graph(weights)
    with caplog.at_level(logging.WARNING):
        result = solve_static(graph)
    assert result.solver == "greedy"
    assert "greedy" in caplog.text
    assert result.plan_slots >= result.lower_bound
    assert verify_linear_code(graph, result.messages())


def test_unknown_solver(fig1):
    with pytest.raises(SolverError):
        solve_static(fig1, "simplex")


def test_relay3_solver_requires_relay_graph(fig1):
    with pytest.raises(HypothesisError):
        solve_static(fig1, "relay3")


def test_row_column_structure():
    assert row_column_structure_check([[0, 2, 0], [0, 0, 1], [1, 0, 0]])
    assert row_column_structure_check([[0, 1, 1], [0, 0, 0], [0, 0, 0]])
    assert not row_column_structure_check([[0, 1, 1], [1, 0, 1], [1, 1, 0]])


def test_two_user_matches_search_and_bound(rng):
    for _ in range(80):
        weights = random_relay_weights(rng, 2, 8)
        graph = relay_graph(weights)
        result = two_user_clearance(graph)
        assert result.plan_slots == optimal_cyclic_plan(graph).plan_slots
        assert result.plan_slots == acyclic_subgraph_bound(graph)


def test_relay3_matches_search_and_bound(rng):
    for _ in range(80):
        weights = random_relay_weights(rng, 3, 8)
        graph = relay_graph(weights)
        result = three_user_relay_clearance(weights)
        assert result.plan_slots == optimal_cyclic_plan(graph).plan_slots
        assert result.plan_slots == acyclic_subgraph_bound(graph)
        assert verify_linear_code(graph, result.messages())


def test_row_structured_relays_have_disjoint_cycles(rng):
    for _ in range(60):
        weights = row_structured_weights(rng, 4)
        assert row_column_structure_check(weights)
        graph = relay_graph(weights)
        result = disjoint_cycle_clearance(graph)
        assert result.plan_slots == optimal_cyclic_plan(graph).plan_slots
        assert result.plan_slots == acyclic_subgraph_bound(graph)


def test_disjoint_formula_on_multicast_graphs(rng):
    applied = cyclic = 0
    for _ in range(400):
        graph = multicast_graph(rng)
        try:
            result = disjoint_cycle_clearance(graph)
        except HypothesisError:
            continue
        applied += 1
        cyclic += result.plan_slots < graph.num_packets
        assert result.plan_slots == optimal_cyclic_plan(graph).plan_slots
        assert result.plan_slots == acyclic_subgraph_bound(graph)
        assert verify_linear_code(graph, result.messages())
    assert applied >= 50
    assert cyclic >= 5


def test_plans_never_beat_the_bound(rng):
    for _ in range(60):
        graph = small_graph(rng)
        bound = best_available_bound(graph)
        greedy_bound = acyclic_subgraph_bound(graph, "greedy")
        best = optimal_cyclic_plan(graph)
        greedy = greedy_cyclic_plan(graph)
        assert greedy_bound <= bound <= best.plan_slots <= greedy.plan_slots <= graph.num_packets
        assert verify_linear_code(graph, best.messages())
        assert verify_linear_code(graph, greedy.messages())
