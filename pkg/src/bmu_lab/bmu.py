"""Bellman memory units: ensemble-per-state and single-pool variants.

In the ensemble variant, each discretized state gets its own ensemble of
b neurons (one per action bin) across d action dimensions. A neuron's
encoder IS its stored Q value: activities are a monotone map of the
encoder-driven input current, so picking the most active neuron picks the
action with the largest Q, and the Bellman update simply writes the new Q
back into the encoder.

The pool variant keeps a single fixed-capacity pool of neurons and assigns
one neuron to each newly encountered state; the Q values live on the
neuron's n outgoing axon weights. Exhausting the pool is a hard error,
mirroring running out of on-chip resources.
"""

from __future__ import annotations

import math

import numpy as np

from .graphio import GraphSnapshot
from .metrics import NetworkStats, parameter_count
from .synaptic import optimistic_q

DEFAULT_POOL_CAPACITY = 300
LARGE_POOL_CAPACITY = 600

ENCODER_INIT_MODES = ("uniform", "zeros", "optimistic")


class PoolCapacityError(RuntimeError):
    def __init__(self, capacity: int):
        super().__init__(f"neuron pool exhausted: all {capacity} neurons assigned")
        self.capacity = capacity


class EdgeBook:
    """Distinct (source, action) -> latest target edges with fan-in counts."""

    def __init__(self):
        self._targets: dict[tuple[str, object], str] = {}
        self._fan_in: dict[str, int] = {}

    def point(self, source: str, action, target: str) -> None:
        slot = (source, action)
        old = self._targets.get(slot)
        if old == target:
            return
        if old is not None:
            self._fan_in[old] -= 1
        self._targets[slot] = target
        self._fan_in[target] = self._fan_in.get(target, 0) + 1

    def fan_in_of(self, key: str) -> int:
        return self._fan_in.get(key, 0)

    def edge_list(self) -> list[tuple[str, object, str]]:
        return [(source, action, target)
                for (source, action), target in self._targets.items()]

    def __len__(self) -> int:
        return len(self._targets)


def identity(current: float) -> float:
    return current


class Ensemble:
    """b neurons across d action dimensions; encoders double as Q storage."""

    def __init__(self, state_key: str, b: int, d: int, encoders):
        self.state_key = state_key
        self.b = b
        self.d = d
        self.encoders = [[float(encoders[j][k]) for k in range(d)] for j in range(b)]
        self.gains = [[1.0] * d for _ in range(b)]
        self.biases = [[0.0] * d for _ in range(b)]
        # action value grid; for the cartpole path this is just the bin index
        self.actions = [[float(j) for _ in range(d)] for j in range(b)]

    def q_value(self, j: int, k: int = 0) -> float:
        return self.encoders[j][k]

    def value_function(self, k: int = 0) -> float:
        return max(self.encoders[j][k] for j in range(self.b))


class EnsemblePopulation:
    def __init__(self, b: int = 2, d: int = 1):
        self.b = b
        self.d = d
        self.ensembles: dict[str, Ensemble] = {}
        self.order: list[str] = []
        # every ensemble is also driven by the constant unit-step input node
        self.input_node_links: list[str] = []
        self.edges = EdgeBook()


def spawn_ensemble(population: EnsemblePopulation, state_key: str,
                   rng: np.random.Generator, encoder_init: str = "uniform",
                   gamma: float = 0.99, step_reward: float = 1.0) -> Ensemble:
    """New ensemble; encoders drawn uniform from [-1, 1] by default, or set
    to zeros / the optimistic fixed point for matched-init experiments."""
    if state_key in population.ensembles:
        raise ValueError(f"ensemble for state {state_key!r} already exists")
    if encoder_init == "uniform":
        encoders = rng.uniform(-1.0, 1.0, size=(population.b, population.d))
    elif encoder_init == "zeros":
        encoders = np.zeros((population.b, population.d))
    elif encoder_init == "optimistic":
        encoders = np.full((population.b, population.d), optimistic_q(step_reward, gamma))
    else:
        raise ValueError(f"encoder_init must be one of {ENCODER_INIT_MODES}, got {encoder_init!r}")
    ensemble = Ensemble(state_key, population.b, population.d, encoders)
    population.ensembles[state_key] = ensemble
    population.order.append(state_key)
    population.input_node_links.append(state_key)
    return ensemble


def activity(ensemble: Ensemble, x=None, g=identity) -> list[list[float]]:
    """Firing rates a[j][k] = G(gain * e[j][k] * x[k] + bias) under the
    default unit-step input; G is any monotone non-decreasing map."""
    if x is None:
        x = [1.0] * ensemble.d
    return [
        [
            g(ensemble.gains[j][k] * ensemble.encoders[j][k] * x[k] + ensemble.biases[j][k])
            for k in range(ensemble.d)
        ]
        for j in range(ensemble.b)
    ]


def select_action(ensemble: Ensemble, x=None, g=identity) -> tuple[list[float], list[int]]:
    """Per dimension, the action of the most active neuron (ties -> lowest)."""
    acts = activity(ensemble, x, g)
    values: list[float] = []
    indices: list[int] = []
    for k in range(ensemble.d):
        j_max = 0
        for j in range(1, ensemble.b):
            if acts[j][k] > acts[j_max][k]:
                j_max = j
        indices.append(j_max)
        values.append(ensemble.actions[j_max][k])
    return values, indices


def bmu_update(population: EnsemblePopulation, ensemble: Ensemble, j_max,
               reward: float, next_ensemble: Ensemble,
               alpha: float, gamma: float, terminal: bool = False) -> None:
    """Bellman-update the selected encoders and record the transition edge.

    The next state's value is read from its current encoders before
    anything is written back (read-then-update).
    """
    if isinstance(j_max, int):
        j_max = [j_max] * ensemble.d
    if not math.isfinite(reward):
        raise ValueError(f"reward must be finite, got {reward}")
    for k in range(ensemble.d):
        j = j_max[k]
        v_next = 0.0 if terminal else next_ensemble.value_function(k)
        if not math.isfinite(v_next):
            raise ValueError(f"next value must be finite, got {v_next}")
        q = ensemble.encoders[j][k]
        q += alpha * (-q + reward + gamma * v_next)
        ensemble.encoders[j][k] = q
    action_id = j_max[0] if ensemble.d == 1 else tuple(j_max)
    population.edges.point(ensemble.state_key, action_id, next_ensemble.state_key)


def population_stats(population: EnsemblePopulation) -> NetworkStats:
    n = len(population.order)
    if n == 0:
        return NetworkStats(neurons=0, edges=0, avg_fan_in=0.0, parameter_count=0)
    total_fan_in = sum(population.edges.fan_in_of(key) for key in population.order)
    return NetworkStats(
        neurons=n,
        edges=len(population.edges),
        avg_fan_in=total_fan_in / n,
        parameter_count=parameter_count(n, population.b * population.d),
    )


def population_snapshot(population: EnsemblePopulation) -> GraphSnapshot:
    snapshot = GraphSnapshot(name="bmu")
    for key in population.order:
        ensemble = population.ensembles[key]
        snapshot.nodes.append((key, {
            "value": ensemble.value_function(),
            "fan_in": population.edges.fan_in_of(key),
        }))
    for source, action, target in population.edges.edge_list():
        q = population.ensembles[source].q_value(action if isinstance(action, int) else action[0])
        snapshot.edges.append((source, target, {"action": int(action) if isinstance(action, int) else str(action), "q": q}))
    return snapshot


class BmuAgent:
    """Ensemble-per-state agent (one ensemble spawned per discrete state)."""

    kind = "bmu"

    def __init__(self, b: int = 2, d: int = 1, alpha: float = 0.9, gamma: float = 0.99,
                 rng: np.random.Generator | None = None, encoder_init: str = "uniform",
                 step_reward: float = 1.0):
        self.alpha = alpha
        self.gamma = gamma
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.encoder_init = encoder_init
        self.step_reward = step_reward
        self.population = EnsemblePopulation(b=b, d=d)

    def ensure(self, state_key: str) -> bool:
        if state_key in self.population.ensembles:
            return False
        spawn_ensemble(self.population, state_key, self.rng, self.encoder_init,
                       gamma=self.gamma, step_reward=self.step_reward)
        return True

    def select(self, state_key: str, forced: int | None = None) -> int:
        if forced is not None:
            return forced
        values, _ = select_action(self.population.ensembles[state_key])
        return int(values[0])

    def update(self, state_key: str, action: int, reward: float,
               next_key: str, terminal: bool) -> None:
        bmu_update(
            self.population,
            self.population.ensembles[state_key],
            action,
            reward,
            self.population.ensembles[next_key],
            self.alpha,
            self.gamma,
            terminal=terminal,
        )

    def q_values(self, state_key: str) -> list[float]:
        ensemble = self.population.ensembles[state_key]
        return [ensemble.q_value(j) for j in range(ensemble.b)]

    def stats(self) -> NetworkStats:
        return population_stats(self.population)

    def snapshot(self) -> GraphSnapshot:
        return population_snapshot(self.population)

    def serialize(self) -> dict:
        return {
            "kind": self.kind,
            "b": self.population.b,
            "d": self.population.d,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "encoder_init": self.encoder_init,
            "ensembles": [
                {"key": key, "encoders": self.population.ensembles[key].encoders}
                for key in self.population.order
            ],
            "edges": [
                {"source": s, "action": a, "target": t}
                for s, a, t in self.population.edges.edge_list()
            ],
        }

    @classmethod
    def deserialize(cls, payload: dict) -> "BmuAgent":
        agent = cls(b=payload["b"], d=payload["d"], alpha=payload["alpha"],
                    gamma=payload["gamma"], encoder_init=payload["encoder_init"])
        for entry in payload["ensembles"]:
            ensemble = spawn_ensemble(agent.population, entry["key"],
                                      agent.rng, encoder_init="zeros")
            ensemble.encoders = [[float(v) for v in row] for row in entry["encoders"]]
        for edge in payload["edges"]:
            action = edge["action"]
            agent.population.edges.point(edge["source"],
                                         action if isinstance(action, int) else tuple(action),
                                         edge["target"])
        return agent


def encoder_csv(population: EnsemblePopulation) -> str:
    lines = ["state_key,neuron,dimension,encoder"]
    for key in population.order:
        ensemble = population.ensembles[key]
        for j in range(ensemble.b):
            for k in range(ensemble.d):
                lines.append(f"{key},{j},{k},{ensemble.encoders[j][k]!r}")
    return "\n".join(lines) + "\n"


def pool_csv(pool: "NeuronPool") -> str:
    lines = ["state_key,action,q"]
    for key, index in pool.assigned.items():
        for action, weight in enumerate(pool.weights[index]):
            lines.append(f"{key},{action},{weight!r}")
    return "\n".join(lines) + "\n"


class NeuronPool:
    """Fixed pool of neurons, one claimed per state; Q lives on axon weights."""

    def __init__(self, capacity: int = DEFAULT_POOL_CAPACITY, n_actions: int = 2):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.n_actions = n_actions
        self.assigned: dict[str, int] = {}
        self.weights: list[list[float]] = []
        self.next_free = 0
        self.edges = EdgeBook()


def pool_assign(pool: NeuronPool, state_key: str) -> int:
    """Claim the next free neuron for a new state and spawn its axons."""
    if state_key in pool.assigned:
        raise ValueError(f"state {state_key!r} already has a neuron")
    if pool.next_free >= pool.capacity:
        raise PoolCapacityError(pool.capacity)
    index = pool.next_free
    pool.next_free += 1
    pool.assigned[state_key] = index
    pool.weights.append([0.0] * pool.n_actions)
    return index


def pool_select(pool: NeuronPool, state_key: str) -> int:
    weights = pool.weights[pool.assigned[state_key]]
    j_max = 0
    for j in range(1, len(weights)):
        if weights[j] > weights[j_max]:
            j_max = j
    return j_max


def pool_update(pool: NeuronPool, state_key: str, action: int, reward: float,
                next_key: str, alpha: float, gamma: float, terminal: bool = False) -> None:
    if not math.isfinite(reward):
        raise ValueError(f"reward must be finite, got {reward}")
    weights = pool.weights[pool.assigned[state_key]]
    v_next = 0.0 if terminal else max(pool.weights[pool.assigned[next_key]])
    weights[action] += alpha * (-weights[action] + reward + gamma * v_next)
    pool.edges.point(state_key, action, next_key)


def pool_stats(pool: NeuronPool) -> NetworkStats:
    n = len(pool.assigned)
    if n == 0:
        return NetworkStats(neurons=0, edges=0, avg_fan_in=0.0, parameter_count=0)
    total_fan_in = sum(pool.edges.fan_in_of(key) for key in pool.assigned)
    return NetworkStats(
        neurons=n,
        edges=len(pool.edges),
        avg_fan_in=total_fan_in / n,
        parameter_count=parameter_count(n, pool.n_actions),
    )


def pool_snapshot(pool: NeuronPool) -> GraphSnapshot:
    snapshot = GraphSnapshot(name="bmu-pool")
    for key, index in pool.assigned.items():
        snapshot.nodes.append((key, {
            "value": max(pool.weights[index]),
            "fan_in": pool.edges.fan_in_of(key),
        }))
    for source, action, target in pool.edges.edge_list():
        q = pool.weights[pool.assigned[source]][action]
        snapshot.edges.append((source, target, {"action": action, "q": q}))
    return snapshot


class PoolAgent:
    """Single-ensemble agent backed by a fixed-capacity neuron pool."""

    kind = "bmu-pool"

    def __init__(self, capacity: int = DEFAULT_POOL_CAPACITY, n_actions: int = 2,
                 alpha: float = 0.9, gamma: float = 0.99):
        self.alpha = alpha
        self.gamma = gamma
        self.pool = NeuronPool(capacity=capacity, n_actions=n_actions)

    def ensure(self, state_key: str) -> bool:
        if state_key in self.pool.assigned:
            return False
        pool_assign(self.pool, state_key)
        return True

    def select(self, state_key: str, forced: int | None = None) -> int:
        if forced is not None:
            return forced
        return pool_select(self.pool, state_key)

    def update(self, state_key: str, action: int, reward: float,
               next_key: str, terminal: bool) -> None:
        pool_update(self.pool, state_key, action, reward, next_key,
                    self.alpha, self.gamma, terminal=terminal)

    def q_values(self, state_key: str) -> list[float]:
        return list(self.pool.weights[self.pool.assigned[state_key]])

    def stats(self) -> NetworkStats:
        return pool_stats(self.pool)

    def snapshot(self) -> GraphSnapshot:
        return pool_snapshot(self.pool)

    def serialize(self) -> dict:
        return {
            "kind": self.kind,
            "capacity": self.pool.capacity,
            "n_actions": self.pool.n_actions,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "assigned": list(self.pool.assigned.items()),
            "weights": self.pool.weights,
            "edges": [
                {"source": s, "action": a, "target": t}
                for s, a, t in self.pool.edges.edge_list()
            ],
        }

    @classmethod
    def deserialize(cls, payload: dict) -> "PoolAgent":
        agent = cls(capacity=payload["capacity"], n_actions=payload["n_actions"],
                    alpha=payload["alpha"], gamma=payload["gamma"])
        for key, index in payload["assigned"]:
            agent.pool.assigned[key] = index
        agent.pool.weights = [[float(v) for v in row] for row in payload["weights"]]
        agent.pool.next_free = len(agent.pool.weights)
        for edge in payload["edges"]:
            agent.pool.edges.point(edge["source"], edge["action"], edge["target"])
        return agent
