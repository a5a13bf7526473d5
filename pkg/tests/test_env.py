import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import kh_small, seeds
from oracles import random_connected
from spatial_uct.env import (
    BUDGET_TOL,
    MdpState,
    apply_action,
    budget_from_tau,
    budget_set,
    final_reward,
    initial_state,
    is_terminal,
    random_policy,
    replay,
    run_episode,
    scripted_policy,
    total_edge_cost,
    valid_actions,
)
from spatial_uct.errors import InvalidActionError
from spatial_uct.graph import SpatialNetwork, build_cost_table
from spatial_uct.objectives import ObjectiveKind, RewardFunction, efficiency

EFF = ObjectiveKind.efficiency()


def valid_oracle(s, table, phi=None):
    """Valid actions straight from the set definitions (strengthened even-step rule)."""
    n = s.graph.n
    B = lambda i: {j for j in table.K(i) if table.costs[i, j] <= s.budget + 1e-9}  # noqa: E731
    if s.stub is None:
        out = {v for v in range(n) if any(u != v and not s.graph.has_edge(v, u) for u in B(v))}
        return sorted(out & set(phi)) if phi is not None else sorted(out)
    return sorted(v for v in B(s.stub) if v != s.stub and not s.graph.has_edge(s.stub, v))


@pytest.fixture
def path_table(path4):
    # rho=2: K(0)={1,2}, K(1)=K(2)={0,1,2,3} minus self, K(3)={1,2}; new-edge costs 2/3 and 1
    return build_cost_table(path4, 2.0)


class TestBudget:
    def test_single_edge_unit_cost(self):
        G = SpatialNetwork([(0, 0), (1, 1)], [(0, 1)])
        assert budget_from_tau(G, build_cost_table(G, 1.0), 0.1) == pytest.approx(0.1)

    def test_tau_one_sums_costs(self):
        # normalised edge costs 0.2 and 0.3 against the longest pair 1.0
        G = SpatialNetwork([(0, 0), (0.2, 0), (0.5, 0), (1.0, 0)], [(0, 1), (1, 2), (2, 3)])
        t = build_cost_table(G, 1.0)
        assert budget_from_tau(SpatialNetwork(G.positions, [(0, 1), (1, 2)]), t, 1.0) == pytest.approx(0.5)

    def test_edgeless_is_zero(self, path4, path_table):
        assert total_edge_cost(SpatialNetwork(path4.positions), path_table) == 0.0

    def test_tau_must_be_positive(self, path4, path_table):
        with pytest.raises(ValueError):
            budget_from_tau(path4, path_table, 0.0)

    def test_budget_set(self, path_table):
        assert budget_set(0, 0.0, path_table) == set()
        assert budget_set(0, 1.0, path_table) == path_table.K(0) == {1, 2}
        assert budget_set(0, 0.5, path_table) == {1}
        # tolerance admits an exact-cost edge after floating-point drift
        assert budget_set(0, 2 / 3 - 1e-12, path_table) == {1, 2}


class TestValidActions:
    def test_fixture_sets(self, path4, path_table):
        s = MdpState(path4, None, 0.7)
        assert valid_actions(s, path_table) == [0, 1, 2, 3]
        assert valid_actions(MdpState(path4, 0, 0.7), path_table) == [2]
        assert valid_actions(MdpState(path4, 1, 1.0), path_table) == [3]
        assert valid_actions(MdpState(path4, None, 0.5), path_table) == []

    def test_literal_predicate_admits_dead_end_stubs(self, path4, path_table):
        s = MdpState(path4, None, 0.5)
        # every affordable connectable node is already a neighbour
        assert valid_actions(s, path_table) == []
        assert valid_actions(s, path_table, literal=True) == [0, 1, 2, 3]
        assert valid_actions(MdpState(path4, 0, 0.5), path_table) == []

    def test_complete_graph_has_none(self):
        pos = np.random.default_rng(0).random((5, 2))
        G = SpatialNetwork(pos, [(i, j) for i in range(5) for j in range(i + 1, 5)])
        assert valid_actions(MdpState(G, None, 10.0), build_cost_table(G, 2.0)) == []

    def test_restriction_only_at_even_parity(self, path4, path_table):
        assert valid_actions(MdpState(path4, None, 1.0), path_table, {1, 2}) == [1, 2]
        # the stub's targets are never filtered
        assert valid_actions(MdpState(path4, 1, 1.0), path_table, {1, 2}) == [3]

    @given(seeds, st.integers(3, 12), st.floats(1.0, 3.0), st.floats(0.0, 1.0))
    def test_matches_definition(self, seed, n, rho, b):
        rng = np.random.default_rng(seed)
        G = random_connected(rng, n, 0.15)
        t = build_cost_table(G, rho)
        phi = set(rng.choice(n, size=max(1, n // 2), replace=False).tolist())
        s = MdpState(G, None, b)
        assert valid_actions(s, t) == valid_oracle(s, t)
        assert valid_actions(s, t, phi) == valid_oracle(s, t, phi)
        for stub in range(n):
            odd = MdpState(G, stub, b)
            assert valid_actions(odd, t) == valid_oracle(odd, t)


class TestTransitions:
    def test_even_step_keeps_budget(self, path4, path_table):
        s = apply_action(MdpState(path4, None, 0.7), 0, path_table)
        assert (s.stub, s.budget, s.graph) == (0, 0.7, path4)
        assert s.parity == 1

    def test_odd_step_commits(self):
        # node 0 hangs off node 2 at cost 1, so K(0) = {1} with cost 0.25
        G = SpatialNetwork([(0, 0), (0.25, 0), (1, 0)], [(0, 2), (1, 2)])
        t = build_cost_table(G, 1.0)
        s = apply_action(MdpState(G, 0, 0.4), 1, t)
        assert s.graph.has_edge(0, 1) and s.stub is None
        assert s.budget == pytest.approx(0.15)

    def test_two_phase_trace(self, path4, path_table):
        s0 = MdpState(path4, None, 1.0)
        s2 = apply_action(apply_action(s0, 1, path_table), 3, path_table)
        assert s2.graph.edges() == [(0, 1), (1, 2), (1, 3), (2, 3)]
        assert s2.budget == pytest.approx(1 / 3)
        assert s0.graph.edges() == [(0, 1), (1, 2), (2, 3)]

    @pytest.mark.parametrize("stub,a", [(None, 7), (0, 1), (0, 3), (0, 0)])
    def test_invalid_rejected(self, path4, path_table, stub, a):
        with pytest.raises(InvalidActionError):
            apply_action(MdpState(path4, stub, 1.0), a, path_table)

    def test_terminal_and_reward(self, path4, path_table, six_nodes):
        assert is_terminal(MdpState(path4, None, 0.5), path_table)
        assert not is_terminal(MdpState(path4, None, 0.7), path_table)
        # collinear shortcut: no shortest path gets shorter
        assert final_reward(EFF, path4.with_edge(0, 2), path4) == pytest.approx(0.0, abs=1e-15)
        H = six_nodes.with_edge(0, 5)
        assert final_reward(EFF, H, six_nodes) == pytest.approx(efficiency(H) - efficiency(six_nodes))
        assert final_reward(EFF, H, six_nodes) > 0

    def test_complete_graph_terminal_at_start(self):
        pos = np.random.default_rng(2).random((4, 2))
        G = SpatialNetwork(pos, [(i, j) for i in range(4) for j in range(i + 1, 4)])
        t = build_cost_table(G, 1.0)
        ep = run_episode(initial_state(G, t, 0.5), random_policy, t, EFF, np.random.default_rng(0))
        assert ep.actions == [] and ep.reward == 0.0


class TestEpisodes:
    def test_random_policy_deterministic(self):
        G = kh_small(1, 12)
        t = build_cost_table(G, 2.0)
        s0 = initial_state(G, t, 0.3)
        a = run_episode(s0, random_policy, t, EFF, np.random.default_rng(4))
        b = run_episode(s0, random_policy, t, EFF, np.random.default_rng(4))
        assert a.actions == b.actions and a.reward == b.reward and a.final_graph == b.final_graph

    def test_budget_below_cheapest(self, path4, path_table):
        ep = run_episode(MdpState(path4, None, 0.6), random_policy, path_table, EFF, np.random.default_rng(0))
        assert ep.actions == [] and ep.added_edges == [] and ep.reward == 0.0

    def test_min_cost_sequence(self, path4, path_table):
        def cheapest(s, legal, rng):
            if s.stub is None:
                return min(legal, key=lambda v: min(path_table.costs[v, u] for u in valid_actions(MdpState(s.graph, v, s.budget), path_table)))
            return min(legal, key=lambda v: path_table.costs[s.stub, v])

        ep = run_episode(MdpState(path4, None, 2.0), cheapest, path_table, EFF, np.random.default_rng(0))
        # (0,2) and (1,3) cost 2/3 each and come first; (0,3) costs 1 and is then unaffordable
        assert [(i, j) for i, j, _ in ep.added_edges] == [(0, 2), (1, 3)]
        assert ep.final_budget == pytest.approx(2 / 3)

    def test_invalid_policy_names_step(self, path4, path_table):
        with pytest.raises(InvalidActionError, match="step 1"):
            run_episode(MdpState(path4, None, 1.0), scripted_policy([0, 3]), path_table, EFF, np.random.default_rng(0))

    def test_replay_reproduces(self):
        G = kh_small(2, 12)
        t = build_cost_table(G, 2.0)
        f = RewardFunction(ObjectiveKind.robustness(), G, seed=3)
        s0 = initial_state(G, t, 0.3)
        ep = run_episode(s0, random_policy, t, f, np.random.default_rng(8))
        again = replay(s0, ep.actions, t, RewardFunction(ObjectiveKind.robustness(), G, seed=3, cache=False))
        assert again.reward == ep.reward and again.added_edges == ep.added_edges
        with pytest.raises(InvalidActionError):
            replay(s0, [G.n + 1], t, f)

    @settings(max_examples=1000)
    @given(seeds, st.integers(4, 14), st.floats(1.0, 2.5), st.floats(0.05, 0.6), st.booleans())
    def test_budget_conservation_and_containment(self, seed, n, rho, tau, literal):
        rng = np.random.default_rng(seed)
        G = random_connected(rng, n, 0.05)
        t = build_cost_table(G, rho)
        s0 = initial_state(G, t, tau)
        ep = run_episode(s0, random_policy, t, EFF, rng, literal=literal)
        check_episode(G, t, s0.budget, ep)
        pos = t.costs[t.connectable & (t.costs > 0)]
        assert len(ep.actions) <= 2 * math.ceil(s0.budget / pos.min()) + (1 if literal else 0)
        if not literal:
            assert len(ep.actions) % 2 == 0


def check_episode(G, table, b0, ep):
    """Containment, conservation and E0 inclusion for any recorded episode."""
    spent = 0.0
    for i, j, c in ep.added_edges:
        assert table.connectable[i, j]
        assert not G.has_edge(i, j)
        assert c == table.costs[i, j]
        spent += c
    assert spent <= b0 + BUDGET_TOL
    assert ep.final_budget == pytest.approx(b0 - spent, abs=1e-9)
    assert ep.final_budget >= -BUDGET_TOL
    assert set(G.edges()) <= set(ep.final_graph.edges())
    assert ep.final_graph.edge_count == G.edge_count + len(ep.added_edges)
