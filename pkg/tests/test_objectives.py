import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import seeds
from oracles import attack_curve_oracle, efficiency_oracle, exact_robustness_oracle, random_connected, to_nx
from spatial_uct.errors import ConfigError, GraphError
from spatial_uct.graph import SpatialNetwork
from spatial_uct.objectives import (
    MAX_EXACT_ORDERS,
    _adaptive_order,
    ObjectiveKind,
    RewardFunction,
    attack_curve,
    attack_permutation,
    efficiency,
    ideal_efficiency_sum,
    objective_value,
    robustness,
    robustness_exact,
)


def complete(n, rng):
    pos = rng.random((n, 2))
    return SpatialNetwork(pos, [(i, j) for i in range(n) for j in range(i + 1, n)])


def k4():
    return complete(4, np.random.default_rng(0))


def star3():
    return SpatialNetwork([(0.5, 0.5), (0.5, 0.9), (0.9, 0.5), (0.1, 0.5)], [(0, 1), (0, 2), (0, 3)])


class TestEfficiency:
    def test_l_shape(self):
        # unit legs: pairs at distance 1, 1 and sqrt2; the path between the far ends has length 2
        G = SpatialNetwork([(0, 0), (1, 0), (1, 1)], [(0, 1), (1, 2)])
        assert efficiency(G) == pytest.approx((1 + 1 + 0.5) / (1 + 1 + 1 / math.sqrt(2)), abs=1e-12)
        assert efficiency(G) == pytest.approx(0.923495, abs=1e-6)

    def test_complete_graph_is_one(self):
        for n in (2, 5, 9):
            assert efficiency(complete(n, np.random.default_rng(n))) == pytest.approx(1.0, abs=1e-12)

    def test_disconnected_pairs_count_zero(self):
        G = SpatialNetwork([(0, 0), (1, 0), (0, 1), (1, 1)], [(0, 1), (2, 3)])
        ideal = 2 * (2 * 1 + 2 * 1 + 2 / math.sqrt(2))
        assert efficiency(G) == pytest.approx(4 / ideal)

    def test_edgeless_is_zero(self):
        assert efficiency(SpatialNetwork([(0, 0), (1, 1)])) == 0.0

    def test_errors(self):
        with pytest.raises(GraphError):
            ideal_efficiency_sum(SpatialNetwork([(0.2, 0.2)]))
        with pytest.raises(GraphError):
            efficiency(SpatialNetwork([(0.2, 0.2), (0.2, 0.2), (0.5, 0.5)], [(0, 2), (1, 2)]))

    @given(seeds, st.integers(2, 30), st.floats(0.0, 0.3))
    def test_matches_dijkstra_oracle(self, seed, n, extra):
        G = random_connected(np.random.default_rng(seed), n, extra)
        assert efficiency(G) == pytest.approx(efficiency_oracle(G), abs=1e-9)

    @given(seeds, st.integers(3, 15))
    def test_monotone_under_edge_addition(self, seed, n):
        rng = np.random.default_rng(seed)
        G = random_connected(rng, n, 0.1)
        absent = [(i, j) for i in range(n) for j in range(i + 1, n) if not G.has_edge(i, j)]
        if absent:
            e = absent[rng.integers(len(absent))]
            assert efficiency(G.with_edge(*e)) >= efficiency(G) - 1e-15


class TestRobustness:
    def test_k4_exact(self):
        assert robustness_exact(k4()) == 0.375

    def test_star_exact(self):
        assert robustness_exact(star3()) == 0.1875

    def test_monte_carlo_on_vertex_transitive_graph_is_exact(self):
        rng = np.random.default_rng(1)
        assert robustness(k4(), 7, rng) == pytest.approx(0.375, abs=1e-15)

    def test_attack_curve_fixed_order(self, path4):
        # removing 1 leaves {0} and {2,3}; removing 2 next leaves only singletons
        assert attack_curve(path4, [1, 2, 0, 3]) == pytest.approx((2 + 1 + 1 + 0) / 16)

    @given(seeds, st.integers(2, 14), st.floats(0.0, 0.4))
    def test_attack_curve_matches_networkx(self, seed, n, extra):
        rng = np.random.default_rng(seed)
        G = random_connected(rng, n, extra)
        order = rng.permutation(n)
        assert attack_curve(G, order) == pytest.approx(attack_curve_oracle(G, order), abs=1e-12)

    @given(seeds, st.integers(3, 15))
    def test_fixed_order_monotone_under_edge_addition(self, seed, n):
        rng = np.random.default_rng(seed)
        G = random_connected(rng, n, 0.1)
        absent = [(i, j) for i in range(n) for j in range(i + 1, n) if not G.has_edge(i, j)]
        if absent:
            H = G.with_edge(*absent[rng.integers(len(absent))])
            order = rng.permutation(n)
            assert attack_curve(H, order) >= attack_curve(G, order)

    @given(seeds, st.integers(2, 7), st.floats(0.0, 0.5))
    def test_exact_matches_enumeration_oracle(self, seed, n, extra):
        G = random_connected(np.random.default_rng(seed), n, extra)
        assert robustness_exact(G) == pytest.approx(exact_robustness_oracle(G), abs=1e-12)

    @given(seeds, st.integers(2, 20))
    def test_attack_permutation_is_degree_sorted(self, seed, n):
        rng = np.random.default_rng(seed)
        G = random_connected(rng, n, 0.2)
        order = attack_permutation(G, rng)
        assert sorted(order.tolist()) == list(range(n))
        deg = G.degrees()[order]
        assert np.all(np.diff(deg) <= 0)

    def test_ties_shuffled_uniformly(self):
        rng = np.random.default_rng(3)
        counts = Counter(tuple(attack_permutation(star3(), rng).tolist()) for _ in range(6000))
        assert len(counts) == 6 and all(o[0] == 0 for o in counts)
        # every leaf permutation near 1000 draws
        assert all(850 < c < 1150 for c in counts.values())

    def test_monte_carlo_converges_to_exact(self):
        G = random_connected(np.random.default_rng(11), 9, 0.15)
        mc = robustness(G, 4000, np.random.default_rng(0))
        assert mc == pytest.approx(robustness_exact(G), abs=5e-3)

    @given(seeds, st.integers(2, 14))
    def test_adaptive_order_removes_current_max_degree(self, seed, n):
        rng = np.random.default_rng(seed)
        G = random_connected(rng, n, 0.2)
        order = _adaptive_order(np.ascontiguousarray(G.adj), rng.random(n))
        g = to_nx(G)
        for v in order.tolist():
            assert g.degree(v) == max(d for _, d in g.degree())
            g.remove_node(v)

    def test_adaptive_differs_from_static(self):
        # path 0-1-2-3-4: once the centre goes, static still targets 1 and 3 while adaptive sees all degree 1
        G = SpatialNetwork([(0.1 * k, 0.5) for k in range(5)], [(0, 1), (1, 2), (2, 3), (3, 4)])
        static = robustness(G, 400, np.random.default_rng(0))
        adaptive = robustness(G, 400, np.random.default_rng(0), adaptive=True)
        assert static != adaptive

    def test_exact_guard(self):
        G = SpatialNetwork(np.random.default_rng(0).random((12, 2)), [(k, (k + 1) % 12) for k in range(12)])
        assert math.factorial(12) > MAX_EXACT_ORDERS
        with pytest.raises(ConfigError):
            robustness_exact(G)

    def test_bad_sims(self, path4):
        with pytest.raises(ConfigError):
            robustness(path4, 0, np.random.default_rng(0))


class TestKind:
    def test_default_sims_is_quarter_of_nodes(self):
        kind = ObjectiveKind.robustness()
        assert [kind.sims_for(n) for n in (1, 4, 5, 25, 100)] == [1, 1, 2, 7, 25]
        assert ObjectiveKind.robustness(3).sims_for(100) == 3

    @pytest.mark.parametrize("kw", [{"tag": "nope"}, {"tag": "robustness", "robustness_sims": 0},
                                    {"tag": "robustness", "exact": True, "adaptive": True}])
    def test_rejects(self, kw):
        with pytest.raises(ConfigError):
            ObjectiveKind(**kw)

    def test_objective_value_dispatch(self):
        G = star3()
        assert objective_value(ObjectiveKind.efficiency(), G) == efficiency(G)
        assert objective_value(ObjectiveKind.robustness(exact=True), G) == 0.1875
        with pytest.raises(ConfigError):
            objective_value(ObjectiveKind.robustness(), G)


class TestRewardFunction:
    def test_pure_function_of_edge_set(self):
        G = random_connected(np.random.default_rng(5), 12, 0.1)
        f = RewardFunction(ObjectiveKind.robustness(), G, seed=9)
        assert f(G) == f(G) == RewardFunction(ObjectiveKind.robustness(), G, seed=9, cache=False)(G)

    def test_common_random_numbers(self):
        G = random_connected(np.random.default_rng(5), 12, 0.1)
        f = RewardFunction(ObjectiveKind.robustness(), G, seed=9)
        assert f(G) == robustness(G, f.sims, np.random.default_rng(9))

    def test_cache_hits_skip_evaluation(self, six_nodes):
        f = RewardFunction(ObjectiveKind.efficiency(), six_nodes)
        f(six_nodes)
        f(six_nodes)
        assert f.evaluations == 1
        g = RewardFunction(ObjectiveKind.efficiency(), six_nodes, cache=False)
        g(six_nodes)
        g(six_nodes)
        assert g.evaluations == 2

    def test_efficiency_matches_function(self, six_nodes):
        f = RewardFunction(ObjectiveKind.efficiency(), six_nodes)
        H = six_nodes.with_edge(0, 5)
        assert f(H) == pytest.approx(efficiency(H), abs=1e-15)

    def test_exact_kind_has_no_kernel(self, six_nodes):
        assert RewardFunction(ObjectiveKind.robustness(exact=True), six_nodes).kernel_args() is None
        assert RewardFunction(ObjectiveKind.efficiency(), six_nodes).kernel_args() is not None
