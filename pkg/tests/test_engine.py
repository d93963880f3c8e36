import pytest

from flowbp.bp_engine import (
    beliefs_at_round,
    advance_to_round,
    belief,
    check_message_invariants,
    detect_uniqueness,
    estimate,
    init_messages,
    run,
    update_round,
)
from flowbp.flowmodel import FlowNetwork, iteration_bound, preprocess_degree
from flowbp.gen import hard_instance, random_network
from flowbp.oracles import build_tree, exact_solve, is_unique_optimum, tree_solve
from flowbp.pwl import POS_INF, PwlConvex
from helpers import t1_network


def test_init_messages_t1():
    net = t1_network()
    state = init_messages(net)
    assert state.round == 0
    assert len(state.messages) == 6
    assert all(m == PwlConvex.constant(0) for m in state.messages.values())


def test_init_messages_parallel_arcs():
    net = FlowNetwork.from_data(
        {1: 1, 2: -1}, [(1, 1, 2, 1, 1), (2, 1, 2, 1, 2)]
    )
    state = init_messages(net)
    assert len(state.messages) == 4
    assert set(state.messages) == {(1, 1), (1, 2), (2, 1), (2, 2)}


def test_update_round_one_t1():
    net = t1_network()
    s1 = update_round(net, init_messages(net))
    assert s1.round == 1
    # every round-1 message equals the arc's own cost restricted to [0, cap]
    assert s1.message(1, 1) == PwlConvex.linear(1, 0, 2)
    assert s1.message(2, 2) == PwlConvex.linear(1, 0, 2)
    assert s1.message(3, 1) == PwlConvex.linear(3, 0, 2)


def test_update_round_two_t1():
    net = t1_network()
    s2 = update_round(net, update_round(net, init_messages(net)))
    assert s2.message(1, 1) == PwlConvex.linear(2, 0, 2)


def test_belief_round1_t1():
    net = t1_network()
    s1 = update_round(net, init_messages(net))
    b = belief(net, s1, 1)
    assert b == PwlConvex.linear(1, 0, 2)
    # when both messages equal the arc cost, the belief is the arc cost
    for aid in (1, 2, 3):
        assert belief(net, s1, aid) == net.arc_by_id[aid].cost


def test_belief_at_uniqueness_bound_t1():
    net = t1_network()
    state = init_messages(net)
    for _ in range(iteration_bound(net, "uniqueness")):
        state = update_round(net, state)
    assert belief(net, state, 3).argmin() == 0


def test_estimate_t1_converged():
    net = t1_network()
    state = init_messages(net)
    for _ in range(iteration_bound(net, "convergence")):
        state = update_round(net, state)
    est = estimate(net, state)
    assert est.flows == {1: 1, 2: 1, 3: 0}
    assert est.objective == 2
    assert est.feasible
    assert est.ties == ()


def test_run_auto_t1():
    out = run(t1_network())
    assert out.rounds_used == 12
    assert out.assignment.flows == {1: 1, 2: 1, 3: 0}
    assert out.assignment.objective == 2


def test_run_merges_forced_chain():
    net = FlowNetwork.from_data({1: 1, 2: -1}, [(1, 1, 2, 2, 1)])
    out = run(net)
    assert out.rounds_used == 0
    assert out.assignment.flows == {1: 1}
    assert out.assignment.feasible


def test_run_matches_oracle_on_unique_instances():
    hits = 0
    for seed in range(25):
        net = random_network(seed + 500, n=5, m=7, c_max=4, cap_max=3, ensure_unique=True)
        out = run(net)
        ref = exact_solve(net)
        assert out.assignment.flows == ref.flows, seed
        assert out.assignment.objective == ref.objective
        hits += 1
    assert hits == 25


def test_message_invariants_every_round():
    net = random_network(123, n=5, m=8, c_max=3, cap_max=3, ensure_unique=True)
    run(net, on_round=check_message_invariants)


def test_message_domains_stay_within_bounds():
    net = t1_network()
    state = update_round(net, init_messages(net))
    for (aid, _), m in state.messages.items():
        cap = net.arc_by_id[aid].capacity
        assert m.breakpoints[0] >= 0 and m.breakpoints[-1] <= cap


def test_estimate_flags_ties():
    # a free zero-cost circulation: every belief is flat on [0, cap]
    net = FlowNetwork.from_data({1: 0, 2: 0}, [(1, 1, 2, 2, 0), (2, 2, 1, 2, 0)])
    state = update_round(net, init_messages(net))
    est = estimate(net, state)
    assert est.flows == {1: 0, 2: 0}  # smallest minimizers
    assert set(est.ties) == {1, 2}


def test_detect_uniqueness_t1():
    res = detect_uniqueness(t1_network())
    assert res.unique
    assert res.assignment.flows == {1: 1, 2: 1, 3: 0}
    assert res.rounds_used == 30


def test_detect_uniqueness_tie():
    res = detect_uniqueness(t1_network(c3=2))
    assert not res.unique
    assert res.assignment is None


def test_detect_uniqueness_near_tie_family():
    d = 5
    net = t1_network(c3=2 * d - 1, d=d)
    res = detect_uniqueness(net)
    assert res.unique
    assert res.assignment.flows == exact_solve(net).flows


def test_detect_uniqueness_fast_equals_slow():
    for seed in range(8):
        net = random_network(seed + 40, n=4, m=5, c_max=2, cap_max=2)
        fast = detect_uniqueness(net, fast=True)
        slow = detect_uniqueness(net, fast=False)
        assert fast.unique == slow.unique
        if fast.unique:
            assert fast.assignment.flows == slow.assignment.flows
        assert fast.executed_rounds <= slow.executed_rounds


def test_detect_uniqueness_empty_after_preprocessing():
    net = FlowNetwork.from_data({1: 1, 2: -1}, [(1, 1, 2, 2, 1)])
    res = detect_uniqueness(net)
    assert res.unique
    assert res.assignment.flows == {1: 1}


def test_threads_do_not_change_results():
    net = random_network(7, n=5, m=7, c_max=3, cap_max=3)
    s1 = init_messages(net)
    s4 = init_messages(net)
    for _ in range(6):
        s1 = update_round(net, s1, threads=1)
        s4 = update_round(net, s4, threads=4)
    assert s1.messages == s4.messages


def test_fast_beliefs_match_literal_run():
    # the periodic-orbit shortcut must reproduce round-N beliefs exactly
    # up to one additive constant per arc
    for net, target in [
        (t1_network(), 30),
        (t1_network(c3=2), 25),
        (hard_instance(6), 40),
        (random_network(4, n=4, m=6, c_max=3, cap_max=2), 35),
    ]:
        fast, executed = beliefs_at_round(net, target)
        assert executed < target
        lit = init_messages(net)
        for _ in range(target):
            lit = update_round(net, lit)
        for a in net.arcs:
            bf = fast[a.id]
            bl = belief(net, lit, a.id)
            assert bf.breakpoints == bl.breakpoints
            assert bf.slopes == bl.slopes
            # values agree up to one constant across the whole domain
            lo = bl.breakpoints[0]
            off = bf.evaluate(lo) - bl.evaluate(lo)
            for z in range(lo, bl.breakpoints[-1] + 1):
                assert bf.evaluate(z) - bl.evaluate(z) == off


def test_beliefs_match_computation_tree():
    # the depth-limited tree optimum with pinned root flow equals the belief
    for seed in range(12):
        net = random_network(seed + 2000, n=4, m=5, c_max=3, cap_max=2)
        reduced, _ = preprocess_degree(net)
        if reduced.m == 0:
            continue
        state = init_messages(reduced)
        for depth in (1, 2, 3):
            state = update_round(reduced, state)
            for a in reduced.arcs:
                b = belief(reduced, state, a.id)
                tree = build_tree(reduced, a.id, depth)
                for z in range(a.capacity + 1):
                    assert b.evaluate(z) == tree_solve(tree, z), (seed, a.id, depth, z)


def test_oscillation_on_near_tie_instance():
    # the near-tie family needs a number of rounds growing with d before
    # the path-arc estimate settles
    settle_rounds = []
    for d in (12, 24, 48):
        net = hard_instance(d)
        state = init_messages(net)
        history = []
        for _ in range(3 * d):
            state = update_round(net, state)
            history.append(belief(net, state, 1).argmin())
        final = history[-1]
        last_change = max(i for i, v in enumerate(history) if v != final) + 2
        settle_rounds.append(last_change)
        # still oscillating throughout the early window of rounds
        window = history[: (2 * d // 3 - 1) // 2]
        assert len(set(window)) > 1
    assert settle_rounds[0] < settle_rounds[1] < settle_rounds[2]
    growth = (settle_rounds[-1] - settle_rounds[0]) / (48 - 12)
    assert growth >= 0.2


def test_round_piece_budget():
    # total pieces processed per round stay within the slope-bound budget
    for seed in (21, 22):
        net = random_network(seed + 900, n=5, m=8, c_max=3, cap_max=3)
        out = run(net)
        reduced, _ = preprocess_degree(net)
        m, c = reduced.m, reduced.c_max
        for t, total in enumerate(out.piece_totals, start=1):
            assert total <= 2 * m * (2 * t * c + 1), (seed, t, total)


def test_patience_early_exit_preserves_answer():
    net = t1_network()
    out = run(net, patience=3)
    assert out.executed_rounds < out.rounds_used
    assert out.assignment.flows == exact_solve(net).flows


def test_normalized_rounds_keep_estimates():
    net = t1_network()
    plain = run(net)
    normed = run(net, normalize=True)
    assert plain.assignment.flows == normed.assignment.flows
    # anchored heights are re-zeroed each round under normalization
    assert all(
        m.min_value() == 0 for m in normed.state.messages.values()
    )
