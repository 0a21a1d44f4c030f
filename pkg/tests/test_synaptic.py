"""Graph agent tests: spawn/select/connect/update semantics, gate rules,
the discount kernel, and equivalence with a plain tabular learner."""

import math

import numpy as np
import pytest

from bmu_lab.synaptic import (
    SynapticAgent,
    SynapticGraph,
    bellman_update,
    connect,
    forward_select,
    gamma_to_tau,
    network_stats,
    open_gate,
    optimistic_q,
    spawn_neuron,
    synaptic_filter,
    tau_to_gamma,
)


def zero_graph(kappa=2, gamma=0.99):
    return SynapticGraph(kappa=kappa, gamma=gamma, q_init="zeros")


class TestSpawn:
    def test_fresh_neuron_zero_init(self):
        graph = zero_graph()
        neuron = spawn_neuron(graph, "5_5_5_5_")
        assert len(neuron.synapses) == 2
        assert neuron.value == 0.0
        assert neuron.fan_in == 0
        assert all(not s.gate.is_open for s in neuron.synapses)

    def test_duplicate_key_rejected(self):
        graph = zero_graph()
        spawn_neuron(graph, "5_5_5_5_")
        with pytest.raises(ValueError, match="already exists"):
            spawn_neuron(graph, "5_5_5_5_")

    def test_three_spawns_no_edges(self):
        graph = zero_graph()
        for key in ("1_1_1_1_", "2_2_2_2_", "3_3_3_3_"):
            spawn_neuron(graph, key)
        stats = network_stats(graph)
        assert stats.neurons == 3
        assert stats.edges == 0

    def test_optimistic_init_is_reward_fixed_point(self):
        graph = SynapticGraph(gamma=0.99, q_init="optimistic")
        neuron = spawn_neuron(graph, "5_5_5_5_")
        assert neuron.value == optimistic_q(1.0, 0.99) == pytest.approx(100.0)
        # one step into a fresh state keeps the optimistic value in place
        open_gate(neuron, 0)
        q, _ = bellman_update(neuron, 0, reward=1.0, v_next=100.0, alpha=0.9, gamma=0.99)
        assert q == pytest.approx(100.0)

    def test_tau_attached_to_synapses(self):
        graph = zero_graph(gamma=0.9)
        neuron = spawn_neuron(graph, "0_0_0_0_")
        assert neuron.synapses[0].tau == pytest.approx(gamma_to_tau(0.9))


class TestForwardSelect:
    def test_direct_argmax(self):
        graph = zero_graph()
        neuron = spawn_neuron(graph, "a_key")
        neuron.synapses[0].q = 0.9
        neuron.synapses[1].q = 0.3
        j, freqs = forward_select(neuron, c=1.0)
        assert j == 0
        assert freqs == [0.9, 0.3]

    def test_tie_breaks_to_lowest_index(self):
        graph = zero_graph()
        neuron = spawn_neuron(graph, "a_key")
        j, _ = forward_select(neuron)
        assert j == 0

    def test_negative_q_selection_unaffected_by_clamp(self):
        graph = zero_graph()
        neuron = spawn_neuron(graph, "a_key")
        neuron.synapses[0].q = -10.0
        neuron.synapses[1].q = -8.9
        j, freqs = forward_select(neuron)
        assert j == 1
        assert freqs == [0.0, 0.0]

    def test_gate_opens_exactly_one(self):
        graph = zero_graph()
        neuron = spawn_neuron(graph, "a_key")
        forward_select(neuron)
        assert neuron.open_gates() == [0]

    def test_select_with_open_gate_rejected(self):
        graph = zero_graph()
        neuron = spawn_neuron(graph, "a_key")
        forward_select(neuron)
        with pytest.raises(ValueError, match="open"):
            forward_select(neuron)

    def test_argmax_fidelity_over_random_vectors(self):
        """Clamped frequencies never alter which action wins."""
        rng = np.random.default_rng(42)
        graph = zero_graph(kappa=4)
        neuron = spawn_neuron(graph, "a_key")
        for trial in range(2000):
            qs = rng.normal(0, 5, size=4)
            if trial % 5 == 0:
                qs = np.round(qs)  # force ties regularly
            for syn, q in zip(neuron.synapses, qs):
                syn.q = float(q)
            j, _ = forward_select(neuron, c=rng.uniform(0.1, 10))
            neuron.synapses[j].gate.is_open = False
            assert j == int(np.argmax(qs))


class TestConnect:
    def _pair(self):
        graph = zero_graph()
        a = spawn_neuron(graph, "a_key")
        b = spawn_neuron(graph, "b_key")
        return graph, a, b

    def test_first_edge(self):
        graph, a, b = self._pair()
        open_gate(a, 0)
        connect(graph, a, 0, b)
        assert b.fan_in == 1
        assert network_stats(graph).edges == 1

    def test_duplicate_edge_idempotent(self):
        graph, a, b = self._pair()
        open_gate(a, 0)
        connect(graph, a, 0, b)
        connect(graph, a, 0, b)
        assert b.fan_in == 1
        assert network_stats(graph).edges == 1

    def test_repoint_moves_fan_in(self):
        graph, a, b = self._pair()
        c = spawn_neuron(graph, "c_key")
        open_gate(a, 0)
        connect(graph, a, 0, b)
        connect(graph, a, 0, c)
        assert b.fan_in == 0
        assert c.fan_in == 1
        assert network_stats(graph).edges == 1

    def test_closed_gate_rejected(self):
        graph, a, b = self._pair()
        with pytest.raises(ValueError, match="closed"):
            connect(graph, a, 0, b)


class TestBellmanUpdate:
    def test_hand_value_positive_reward(self):
        graph = zero_graph()
        neuron = spawn_neuron(graph, "a_key")
        open_gate(neuron, 0)
        q, v = bellman_update(neuron, 0, reward=1.0, v_next=0.0, alpha=0.9, gamma=0.99)
        assert q == pytest.approx(0.9, abs=1e-15)
        assert v == pytest.approx(0.9, abs=1e-15)

    def test_hand_value_failure_penalty(self):
        graph = zero_graph()
        neuron = spawn_neuron(graph, "a_key")
        open_gate(neuron, 0)
        q, v = bellman_update(neuron, 0, reward=-10.0, v_next=0.0, alpha=0.9, gamma=0.99)
        assert q == pytest.approx(-9.0, abs=1e-15)
        assert v == 0.0  # the untouched action shields the value function

    def test_zero_alpha_is_identity(self):
        graph = zero_graph()
        neuron = spawn_neuron(graph, "a_key")
        neuron.synapses[0].q = 0.37
        open_gate(neuron, 0)
        q, _ = bellman_update(neuron, 0, reward=123.0, v_next=-5.0, alpha=0.0, gamma=0.99)
        assert q == 0.37

    def test_gate_closes_after_update(self):
        graph = zero_graph()
        neuron = spawn_neuron(graph, "a_key")
        open_gate(neuron, 1)
        bellman_update(neuron, 1, 1.0, 0.0, 0.9, 0.99)
        assert neuron.open_gates() == []

    def test_closed_gate_rejected(self):
        graph = zero_graph()
        neuron = spawn_neuron(graph, "a_key")
        with pytest.raises(ValueError, match="closed"):
            bellman_update(neuron, 0, 1.0, 0.0, 0.9, 0.99)

    def test_non_finite_rejected(self):
        graph = zero_graph()
        neuron = spawn_neuron(graph, "a_key")
        open_gate(neuron, 0)
        with pytest.raises(ValueError, match="finite"):
            bellman_update(neuron, 0, float("nan"), 0.0, 0.9, 0.99)

    def test_value_is_max_over_synapses(self):
        rng = np.random.default_rng(3)
        graph = zero_graph(kappa=3)
        neuron = spawn_neuron(graph, "a_key")
        for _ in range(200):
            j = int(rng.integers(3))
            open_gate(neuron, j)
            bellman_update(neuron, j, float(rng.normal()), float(rng.normal()),
                           0.9, 0.99)
            assert neuron.value == max(s.q for s in neuron.synapses)


class TestDiscountKernel:
    def test_tau_of_099(self):
        assert gamma_to_tau(0.99) == pytest.approx(99.49916247342207, rel=1e-12)

    def test_exact_inverse_point(self):
        assert gamma_to_tau(math.exp(-1.0)) == pytest.approx(1.0, rel=1e-12)

    def test_round_trip(self):
        rng = np.random.default_rng(11)
        for gamma in rng.uniform(1e-6, 1 - 1e-6, size=200):
            assert tau_to_gamma(gamma_to_tau(gamma)) == pytest.approx(gamma, rel=1e-12)

    def test_domain_errors(self):
        for bad in (0.0, 1.0, -0.5, 1.5):
            with pytest.raises(ValueError):
                gamma_to_tau(bad)
        with pytest.raises(ValueError):
            tau_to_gamma(0.0)

    def test_unit_impulse_lag_one_equals_gamma(self):
        tau = gamma_to_tau(0.99)
        assert synaptic_filter([1.0, 0.0], tau, 1) == pytest.approx(0.99, abs=1e-12)

    def test_zero_lag_kernel_value(self):
        assert synaptic_filter([1.0], 5.0, 0) == 1.0

    def test_two_impulses_match_direct_sum(self):
        tau = gamma_to_tau(0.99)
        got = synaptic_filter([1.0, 1.0, 0.0], tau, 2)
        assert got == pytest.approx(math.exp(-2 / tau) + math.exp(-1 / tau), abs=1e-15)

    def test_random_trains_match_brute_force(self):
        rng = np.random.default_rng(19)
        for _ in range(50):
            train = list(rng.uniform(-1, 2, size=rng.integers(1, 30)))
            tau = float(rng.uniform(0.2, 50))
            t = int(rng.integers(0, len(train)))
            brute = sum(train[x] * math.exp(-(t - x) / tau) for x in range(t + 1))
            assert synaptic_filter(train, tau, t) == pytest.approx(brute, rel=1e-12)

    def test_filter_argument_validation(self):
        with pytest.raises(ValueError):
            synaptic_filter([1.0], -1.0, 0)
        with pytest.raises(ValueError):
            synaptic_filter([1.0], 1.0, 3)


class TestNetworkStats:
    def test_parameter_convention_matches_table(self):
        graph = zero_graph()
        for i in range(250):
            spawn_neuron(graph, f"k{i}_")
        assert network_stats(graph).parameter_count == 1000

    def test_dense_table_scale_consistency(self):
        # the same convention over the full 10^4-state grid
        assert 10_000 * (2 + 2) == 40_000

    def test_single_neuron_zero_fan_in(self):
        graph = zero_graph()
        spawn_neuron(graph, "a_key")
        stats = network_stats(graph)
        assert stats.avg_fan_in == 0.0
        assert stats.neurons == 1

    def test_empty_graph_zeros(self):
        stats = network_stats(zero_graph())
        assert (stats.neurons, stats.edges, stats.avg_fan_in, stats.parameter_count) \
            == (0, 0, 0.0, 0)


class PlainTabular:
    """Independent reference learner used as the oracle."""

    def __init__(self, kappa, alpha, gamma):
        self.q = {}
        self.kappa, self.alpha, self.gamma = kappa, alpha, gamma

    def row(self, key):
        return self.q.setdefault(key, [0.0] * self.kappa)

    def update(self, key, action, reward, next_key, terminal):
        row = self.row(key)
        v_next = 0.0 if terminal else max(self.row(next_key))
        row[action] += self.alpha * (-row[action] + reward + self.gamma * v_next)


def random_stream(n, n_keys=40, seed=0):
    rng = np.random.default_rng(seed)
    keys = [f"{i}_{i}_{i}_{i}_" for i in range(n_keys)]
    stream = []
    for _ in range(n):
        s = keys[rng.integers(n_keys)]
        s2 = keys[rng.integers(n_keys)]
        action = int(rng.integers(2))
        terminal = bool(rng.uniform() < 0.05)
        reward = -10.0 if terminal else 1.0
        stream.append((s, action, reward, s2, terminal))
    return stream


def test_trajectory_oracle_equivalence():
    """The graph machinery is semantically a plain tabular learner."""
    agent = SynapticAgent(kappa=2, alpha=0.9, gamma=0.99, q_init="zeros")
    oracle = PlainTabular(2, 0.9, 0.99)
    for s, action, reward, s2, terminal in random_stream(3000, seed=5):
        agent.ensure(s)
        agent.ensure(s2)
        agent.select(s, forced=action)
        agent.update(s, action, reward, s2, terminal)
        oracle.update(s, action, reward, s2, terminal)
        assert abs(agent.q_values(s)[action] - oracle.row(s)[action]) <= 1e-12


def test_topology_counts_non_decreasing():
    agent = SynapticAgent(q_init="zeros")
    last_neurons = last_edges = 0
    for s, action, reward, s2, terminal in random_stream(1500, seed=9):
        agent.ensure(s)
        agent.ensure(s2)
        agent.select(s, forced=action)
        agent.update(s, action, reward, s2, terminal)
        stats = agent.stats()
        assert stats.neurons >= last_neurons
        assert stats.edges >= last_edges
        last_neurons, last_edges = stats.neurons, stats.edges


def test_fan_in_matches_edge_list_recount():
    """Incremental fan-in bookkeeping agrees with a from-scratch recount."""
    agent = SynapticAgent(q_init="zeros")
    for s, action, reward, s2, terminal in random_stream(1200, seed=21):
        agent.ensure(s)
        agent.ensure(s2)
        agent.select(s, forced=action)
        agent.update(s, action, reward, s2, terminal)
    recount = {key: 0 for key in agent.graph.population}
    for _, _, target in agent.graph.edge_list():
        recount[target] += 1
    for key in agent.graph.population:
        assert agent.graph.neurons[key].fan_in == recount[key]


def test_snapshot_carries_node_and_edge_attributes():
    agent = SynapticAgent(q_init="zeros")
    agent.ensure("1_1_1_1_")
    agent.ensure("2_2_2_2_")
    agent.select("1_1_1_1_", forced=1)
    agent.update("1_1_1_1_", 1, 1.0, "2_2_2_2_", False)
    snap = agent.snapshot()
    assert [n for n, _ in snap.nodes] == ["1_1_1_1_", "2_2_2_2_"]
    (source, target, attrs), = snap.edges
    assert (source, target) == ("1_1_1_1_", "2_2_2_2_")
    assert attrs["action"] == 1
    assert attrs["gate"] == "closed"
    assert attrs["q"] == pytest.approx(0.9)


def test_serialize_round_trip():
    agent = SynapticAgent(q_init="zeros")
    for s, action, reward, s2, terminal in random_stream(300, seed=13):
        agent.ensure(s)
        agent.ensure(s2)
        agent.select(s, forced=action)
        agent.update(s, action, reward, s2, terminal)
    clone = SynapticAgent.deserialize(agent.serialize())
    assert clone.serialize() == agent.serialize()
