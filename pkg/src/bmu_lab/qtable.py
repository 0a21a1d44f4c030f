"""Conventional tabular Q-learning over the same state discretization.

Serves two purposes: the comparison row in the summary table, and the
reference semantics for the graph agents (all of them must produce the
same Q values on the same transition stream). Sparse-on-demand storage is
the default; dense mode preallocates every n_bins^4 state row to reproduce
the full-table parameter bookkeeping.
"""

from __future__ import annotations

import math
from itertools import product

from .discretize import key_of
from .graphio import GraphSnapshot
from .metrics import NetworkStats, parameter_count


class QTable:
    def __init__(self, kappa: int = 2, dense: bool = False, n_bins: int = 10,
                 init_value: float = 0.0):
        self.kappa = kappa
        self.dense = dense
        self.n_bins = n_bins
        self.init_value = init_value
        self.rows: dict[str, list[float]] = {}
        self.visits: dict[str, int] = {}
        if dense:
            for bins in product(range(n_bins), repeat=4):
                self.rows[key_of(bins)] = [init_value] * kappa

    def row(self, state_key: str) -> list[float]:
        """Stored row, or a zero view for unseen states (no insertion)."""
        return self.rows.get(state_key, [0.0] * self.kappa)

    def ensure(self, state_key: str) -> bool:
        if state_key in self.rows:
            return False
        self.rows[state_key] = [self.init_value] * self.kappa
        return True


def qtable_select(table: QTable, state_key: str) -> int:
    qs = table.row(state_key)
    j_max = 0
    for j in range(1, len(qs)):
        if qs[j] > qs[j_max]:
            j_max = j
    return j_max


def qtable_update(table: QTable, state_key: str, action: int, reward: float,
                  next_key: str, alpha: float, gamma: float,
                  terminal: bool = False) -> None:
    if not math.isfinite(reward):
        raise ValueError(f"reward must be finite, got {reward}")
    table.ensure(state_key)
    row = table.rows[state_key]
    v_next = 0.0 if terminal else max(table.row(next_key))
    row[action] += alpha * (-row[action] + reward + gamma * v_next)
    table.visits[state_key] = table.visits.get(state_key, 0) + 1


def qtable_stats(table: QTable) -> NetworkStats:
    # fan-in has no natural meaning for a lookup table; reported as n/a
    n = len(table.rows)
    return NetworkStats(
        neurons=n,
        edges=None,
        avg_fan_in=None,
        parameter_count=parameter_count(n, table.kappa),
    )


def qtable_csv(table: QTable) -> str:
    lines = ["state_key,action,q"]
    for key in sorted(table.rows):
        for action, q in enumerate(table.rows[key]):
            lines.append(f"{key},{action},{q!r}")
    return "\n".join(lines) + "\n"


class QTableAgent:
    kind = "qtable"

    def __init__(self, kappa: int = 2, alpha: float = 0.9, gamma: float = 0.99,
                 dense: bool = False, n_bins: int = 10, q_init: str = "zeros",
                 step_reward: float = 1.0):
        if q_init not in ("zeros", "optimistic"):
            raise ValueError(f"q_init must be 'zeros' or 'optimistic', got {q_init!r}")
        self.alpha = alpha
        self.gamma = gamma
        self.q_init = q_init
        init_value = step_reward / (1.0 - gamma) if q_init == "optimistic" else 0.0
        self.table = QTable(kappa=kappa, dense=dense, n_bins=n_bins,
                            init_value=init_value)

    def ensure(self, state_key: str) -> bool:
        return self.table.ensure(state_key)

    def select(self, state_key: str, forced: int | None = None) -> int:
        if forced is not None:
            return forced
        return qtable_select(self.table, state_key)

    def update(self, state_key: str, action: int, reward: float,
               next_key: str, terminal: bool) -> None:
        qtable_update(self.table, state_key, action, reward, next_key,
                      self.alpha, self.gamma, terminal=terminal)

    def q_values(self, state_key: str) -> list[float]:
        return list(self.table.row(state_key))

    def stats(self) -> NetworkStats:
        return qtable_stats(self.table)

    def snapshot(self) -> GraphSnapshot:
        # a table has rows, not topology: nodes only, no edges
        snapshot = GraphSnapshot(name="qtable")
        for key in sorted(self.table.rows):
            row = self.table.rows[key]
            snapshot.nodes.append((key, {"value": max(row), "fan_in": 0}))
        return snapshot

    def serialize(self) -> dict:
        return {
            "kind": self.kind,
            "kappa": self.table.kappa,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "dense": self.table.dense,
            "n_bins": self.table.n_bins,
            "q_init": self.q_init,
            "rows": {key: row for key, row in sorted(self.table.rows.items())},
            "visits": {key: n for key, n in sorted(self.table.visits.items())},
        }

    @classmethod
    def deserialize(cls, payload: dict) -> "QTableAgent":
        agent = cls(kappa=payload["kappa"], alpha=payload["alpha"],
                    gamma=payload["gamma"], dense=payload["dense"],
                    n_bins=payload["n_bins"], q_init=payload.get("q_init", "zeros"))
        for key, row in payload["rows"].items():
            agent.table.rows[key] = [float(v) for v in row]
        agent.table.visits = {key: int(n) for key, n in payload["visits"].items()}
        return agent
