import pytest

from conftest import tiny_corpus
from scarp.graph import dijkstra_all, make_instance
from scarp.repair import (RepairState, connectable_path, greedy_routing,
                          offer, remove_duplicate)
from scarp.structure import brute_force_solve, verify_solution


@pytest.fixture()
def spt(counterexample):
    return dijkstra_all(counterexample)


def test_connectable_path_single_edge(counterexample, spt):
    assert connectable_path({(0, 1): 1.0}, spt, 0) == [0, 1, 0]


def test_connectable_path_empty(counterexample, spt):
    assert connectable_path({}, spt, 0) == [0]


def test_connectable_path_chain(counterexample, spt):
    walk = connectable_path({(1, 2): 1.0, (2, 3): 1.0}, spt, 0)
    assert walk == [0, 1, 2, 3, 0]
    idx = counterexample.edge_index()
    cost = sum(counterexample.edges[idx[(min(a, b), max(a, b))]].cost
               for a, b in zip(walk, walk[1:]))
    assert cost == 4.0


def test_connectable_path_covers_support(counterexample, spt):
    support = {(0, 1): 1.0, (1, 2): 7.0, (0, 3): 2.0}
    walk = connectable_path(support, spt, 0)
    assert walk[0] == walk[-1] == 0
    covered = {(min(a, b), max(a, b)) for a, b in zip(walk, walk[1:])}
    assert set(support) <= covered


def test_connectable_path_depot_anchor(counterexample, spt):
    # Depot anchoring still yields a valid covering walk.
    support = {(1, 2): 1.0, (2, 3): 1.0}
    walk = connectable_path(support, spt, 0, anchor="depot")
    covered = {(min(a, b), max(a, b)) for a, b in zip(walk, walk[1:])}
    assert set(support) <= covered
    assert walk[0] == walk[-1] == 0


def test_remove_duplicate_keeps_clean_walks():
    # Opposite directions are different arcs: nothing to remove.
    assert remove_duplicate([0, 1, 0], {(0, 1)}, 0) == [(0, 1), (1, 0)]
    walk = [0, 1, 2, 3, 0]
    arcs = remove_duplicate(walk, {(1, 2), (2, 3)}, 0)
    assert sorted(arcs) == [(0, 1), (1, 2), (2, 3), (3, 0)]


def test_remove_duplicate_cancels_detour():
    # 1-2-1-2-3-1 traverses arc (1,2) twice; dropping one copy together
    # with the back arc (2,1) keeps balance and coverage at lower cost.
    arcs = remove_duplicate([0, 1, 0, 1, 2, 0], {(0, 1), (1, 2)}, 0)
    assert arcs == [(0, 1), (1, 2), (2, 0)]


def test_remove_duplicate_respects_coverage():
    # The duplicate pair cannot be dropped when it is the only coverage of
    # a support edge.
    walk = [0, 1, 0, 1, 0]
    arcs = remove_duplicate(walk, {(0, 1)}, 0)
    assert arcs == [(0, 1), (1, 0)]


def test_greedy_routing_from_table1_sprays(counterexample, spt, table1):
    y_maps = [dict(r.sprays) for r in table1.routes]
    sol = greedy_routing(y_maps, {}, counterexample, spt, "basic")
    assert sol is not None
    assert sol.objective == 7.0
    assert verify_solution(counterexample, sol, "basic").feasible


def test_greedy_routing_fractional_split(counterexample, spt):
    idx = counterexample.edge_index()
    y_maps = [
        {idx[(1, 2)]: 7.0, idx[(0, 2)]: 1.0},
        {idx[(0, 1)]: 1.0, idx[(1, 2)]: 5.0, idx[(2, 3)]: 1.0, idx[(0, 3)]: 1.0},
    ]
    sol = greedy_routing(y_maps, {}, counterexample, spt, "basic")
    assert sol.objective == 7.0


def test_greedy_routing_single_robot():
    inst = make_instance("single", 3, [(1, 2, 1.0, 8.0), (2, 3, 1.0, 0.0),
                                       (1, 3, 1.0, 0.0)], 8.0)
    spt = dijkstra_all(inst)
    sol = greedy_routing([{0: 8.0}], {}, inst, spt, "basic")
    assert tuple(sol.routes[0].vertices) == (0, 1, 0)
    assert sol.objective == 2.0


def test_greedy_routing_orders_routes_by_cost(counterexample, spt):
    idx = counterexample.edge_index()
    # Put the expensive support on robot 0: repair must reorder.
    y_maps = [
        {idx[(0, 1)]: 1.0, idx[(1, 2)]: 5.0, idx[(2, 3)]: 1.0, idx[(0, 3)]: 1.0},
        {idx[(1, 2)]: 7.0, idx[(0, 2)]: 1.0},
    ]
    sol = greedy_routing(y_maps, {}, counterexample, spt, "basic")
    costs = [r.cost(counterexample) for r in sol.routes]
    assert costs == sorted(costs)


def test_greedy_routing_materializes_singletons(counterexample, spt):
    idx = counterexample.edge_index()
    k23 = idx[(1, 2)]
    y_maps = [
        {k23: 3.0, idx[(0, 2)]: 1.0},
        {idx[(0, 1)]: 1.0, k23: 1.0, idx[(2, 3)]: 1.0, idx[(0, 3)]: 1.0},
    ]
    sol = greedy_routing(y_maps, {k23: 0.9}, counterexample, spt, "large")
    assert sol is not None
    assert sol.singletons == {k23: 1}
    assert verify_solution(counterexample, sol, "large").feasible
    # route costs 3 + 4 plus one singleton trip of 3
    assert sol.objective == 10.0


def test_repair_on_oracle_sprays_is_always_feasible():
    for inst in tiny_corpus(10):
        spt = dijkstra_all(inst)
        reference = brute_force_solve(inst, "basic")
        y_maps = [dict(r.sprays) for r in reference.routes]
        sol = greedy_routing(y_maps, {}, inst, spt, "basic")
        assert sol is not None
        assert verify_solution(inst, sol, "basic").feasible
        assert sol.objective >= reference.objective - 1e-9


def test_offer_semantics():
    state = RepairState(gamma=2)
    assert offer(state, 6110.93, float("inf")) == "accept"
    assert state.accepted_count == 1
    assert offer(state, 5.0, 5.0) == "reject"
    assert offer(state, None, 5.0) == "reject"
    assert not state.enabled
    assert offer(state, 1.0, 5.0) == "disabled"
    assert state.accepted_count == 1


def test_offer_gamma_zero_disabled_from_start():
    state = RepairState(gamma=0)
    assert not state.enabled
    assert offer(state, 1.0, 10.0) == "disabled"
    assert state.accepted_count == 0


def test_offer_accept_resets_counter():
    state = RepairState(gamma=3)
    offer(state, 10.0, 11.0)      # reject? no: 10 < 11 -> accept
    assert state.consecutive_rejections == 0
    offer(state, 12.0, 10.0)
    offer(state, 12.0, 10.0)
    assert state.consecutive_rejections == 2
    assert state.enabled
    offer(state, 9.0, 10.0)
    assert state.consecutive_rejections == 0
    assert state.accepted_count == 2
