"""Tabular baseline tests and its role as reference for the graph agent."""

import numpy as np
import pytest

from bmu_lab.qtable import QTable, QTableAgent, qtable_csv, qtable_select, qtable_stats, qtable_update
from bmu_lab.synaptic import SynapticAgent


class TestSelect:
    def test_unseen_state_reads_zero_and_ties_low(self):
        table = QTable()
        assert qtable_select(table, "9_9_9_9_") == 0
        assert "9_9_9_9_" not in table.rows  # reading never inserts

    def test_argmax(self):
        table = QTable()
        table.rows["s_"] = [-1.0, 2.0]
        assert qtable_select(table, "s_") == 1

    def test_matches_graph_agent_on_identical_q(self):
        rng = np.random.default_rng(101)
        for _ in range(300):
            qs = list(rng.normal(0, 3, size=2))
            table = QTable()
            table.rows["s_"] = list(qs)
            graph = SynapticAgent(q_init="zeros")
            graph.ensure("s_")
            for syn, q in zip(graph.graph.neurons["s_"].synapses, qs):
                syn.q = q
            assert qtable_select(table, "s_") == graph.select("s_")
            graph.graph.neurons["s_"].synapses[qtable_select(table, "s_")].gate.is_open = False


class TestUpdate:
    def test_hand_value(self):
        table = QTable()
        qtable_update(table, "s_", 0, 1.0, "t_", alpha=0.9, gamma=0.99)
        assert table.rows["s_"][0] == pytest.approx(0.9, abs=1e-15)

    def test_terminal_penalty(self):
        table = QTable()
        table.rows["t_"] = [5.0, 5.0]  # must be ignored when terminal
        qtable_update(table, "s_", 0, -10.0, "t_", alpha=0.9, gamma=0.99, terminal=True)
        assert table.rows["s_"][0] == pytest.approx(-9.0, abs=1e-15)

    def test_alpha_one_reaches_fixed_point_in_one_step(self):
        table = QTable()
        table.rows["t_"] = [2.0, 7.0]
        qtable_update(table, "s_", 1, 1.0, "t_", alpha=1.0, gamma=0.5)
        assert table.rows["s_"][1] == pytest.approx(1.0 + 0.5 * 7.0)
        qtable_update(table, "s_", 1, 1.0, "t_", alpha=1.0, gamma=0.5)
        assert table.rows["s_"][1] == pytest.approx(4.5)

    def test_visit_counts(self):
        table = QTable()
        for _ in range(3):
            qtable_update(table, "s_", 0, 1.0, "t_", 0.9, 0.99)
        assert table.visits == {"s_": 3}

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            qtable_update(QTable(), "s_", 0, float("-inf"), "t_", 0.9, 0.99)


class TestModes:
    def test_dense_mode_full_grid(self):
        agent = QTableAgent(dense=True, n_bins=10)
        stats = agent.stats()
        assert stats.neurons == 10_000
        assert stats.parameter_count == 40_000
        assert stats.avg_fan_in is None
        assert stats.edges is None

    def test_sparse_default_counts_visited(self):
        agent = QTableAgent()
        agent.ensure("1_1_1_1_")
        agent.ensure("2_2_2_2_")
        assert agent.stats().neurons == 2
        assert agent.stats().parameter_count == 8

    def test_dense_ensure_never_spawns(self):
        agent = QTableAgent(dense=True)
        assert agent.ensure("5_5_5_5_") is False

    def test_optimistic_init_applies_to_new_rows(self):
        agent = QTableAgent(q_init="optimistic", gamma=0.99)
        agent.ensure("s_")
        assert agent.q_values("s_") == pytest.approx([100.0, 100.0])


def test_qtable_csv_layout():
    agent = QTableAgent()
    agent.ensure("1_1_1_1_")
    text = qtable_csv(agent.table)
    lines = text.strip().split("\n")
    assert lines[0] == "state_key,action,q"
    assert lines[1] == "1_1_1_1_,0,0.0"


def test_stats_of_empty_table():
    stats = qtable_stats(QTable())
    assert stats.neurons == 0
    assert stats.parameter_count == 0


def test_serialize_round_trip():
    agent = QTableAgent()
    agent.update("a_", 0, 1.0, "b_", False)
    agent.update("b_", 1, -10.0, "a_", True)
    clone = QTableAgent.deserialize(agent.serialize())
    assert clone.serialize() == agent.serialize()
