"""Synaptic Q-learning on an evolving neuron/synapse/gate graph.

One neuron per discretized state holds the value function; each of its
kappa synapses holds the Q value of one action plus an exponential-kernel
time constant tau that encodes the discount factor (gamma = e^(-1/tau)).
A normally-closed gate sits on every synapse output: action selection
opens exactly one gate, the step outcome drives the Bellman update through
that open gate, and the gate closes again. New neurons are spawned the
first time a discretized state is seen, so the network topology grows with
the explored region of state space and saturates as the policy converges.

Selection is driven by spike frequencies f_j = c * Q_j, but since a
physical rate cannot be negative the reported frequencies are clamped at
zero while the argmax always sees the raw Q values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graphio import GraphSnapshot
from .metrics import NetworkStats, parameter_count


def gamma_to_tau(gamma: float) -> float:
    """Synaptic time constant equivalent to a discount factor: -1/ln(gamma)."""
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must be in (0, 1), got {gamma}")
    return -1.0 / math.log(gamma)


def tau_to_gamma(tau: float) -> float:
    if tau <= 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    return math.exp(-1.0 / tau)


def synaptic_filter(spike_train, tau: float, t: int) -> float:
    """Post-synaptic current at step t: causal exponential convolution
    sum_{x<=t} I_in(x) * e^(-(t-x)/tau)."""
    if tau <= 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    if not 0 <= t < len(spike_train):
        raise ValueError(f"step {t} outside the spike train of length {len(spike_train)}")
    return sum(spike_train[x] * math.exp(-(t - x) / tau) for x in range(t + 1))


@dataclass
class Gate:
    is_open: bool = False


@dataclass
class Synapse:
    tau: float
    q: float = 0.0
    target: str | None = None
    gate: Gate = field(default_factory=Gate)


@dataclass
class Neuron:
    uid: int
    state_key: str
    synapses: list[Synapse]
    value: float = 0.0
    fan_in: int = 0

    def q_values(self) -> list[float]:
        return [syn.q for syn in self.synapses]

    def open_gates(self) -> list[int]:
        return [j for j, syn in enumerate(self.synapses) if syn.gate.is_open]


Q_INIT_MODES = ("optimistic", "zeros", "uniform")


def optimistic_q(step_reward: float, gamma: float) -> float:
    """Fixed point of an endless step-reward stream, r/(1 - gamma).

    Spawning synapses at exactly this value keeps unexplored corridors
    self-consistently optimistic (a transition into a fresh state maps the
    value onto itself), so greedy selection systematically tries untested
    actions until their real values emerge. Any other starting value decays
    toward this one and injects ordering noise between untried actions.
    """
    return step_reward / (1.0 - gamma)


class SynapticGraph:
    """Evolving directed graph keyed by state; neuron and edge counts only grow."""

    def __init__(self, kappa: int = 2, gamma: float = 0.99,
                 q_init: str = "optimistic", rng: np.random.Generator | None = None,
                 step_reward: float = 1.0):
        if kappa < 1:
            raise ValueError(f"kappa must be >= 1, got {kappa}")
        if q_init not in Q_INIT_MODES:
            raise ValueError(f"q_init must be one of {Q_INIT_MODES}, got {q_init!r}")
        if q_init == "uniform" and rng is None:
            raise ValueError("uniform q_init needs an rng")
        self.kappa = kappa
        self.gamma = gamma
        self.tau = gamma_to_tau(gamma)
        self.q_init = q_init
        self.rng = rng
        self.step_reward = step_reward
        self.neurons: dict[str, Neuron] = {}
        self.population: list[str] = []

    def _initial_q(self) -> float:
        if self.q_init == "uniform":
            return float(self.rng.uniform(0.0, 1e-3))
        if self.q_init == "optimistic":
            return optimistic_q(self.step_reward, self.gamma)
        return 0.0

    def edge_list(self) -> list[tuple[str, int, str]]:
        edges = []
        for key in self.population:
            neuron = self.neurons[key]
            for j, syn in enumerate(neuron.synapses):
                if syn.target is not None:
                    edges.append((key, j, syn.target))
        return edges


def spawn_neuron(graph: SynapticGraph, state_key: str) -> Neuron:
    """Create the neuron for a new state with kappa closed-gate synapses."""
    if state_key in graph.neurons:
        raise ValueError(f"neuron for state {state_key!r} already exists")
    synapses = [Synapse(tau=graph.tau, q=graph._initial_q()) for _ in range(graph.kappa)]
    neuron = Neuron(
        uid=len(graph.population),
        state_key=state_key,
        synapses=synapses,
        value=max(syn.q for syn in synapses),
    )
    graph.neurons[state_key] = neuron
    graph.population.append(state_key)
    return neuron


def open_gate(neuron: Neuron, action: int) -> None:
    if neuron.open_gates():
        raise ValueError(f"neuron {neuron.state_key} already has an open gate")
    neuron.synapses[action].gate.is_open = True


def forward_select(neuron: Neuron, c: float = 1.0) -> tuple[int, list[float]]:
    """Greedy action choice: open the gate of the highest-Q synapse.

    Returns the selected index and the emitted spike frequencies
    max(0, c*Q_j). Ties break toward the lowest action index, and the
    clamp never affects which action wins.
    """
    qs = neuron.q_values()
    j_max = 0
    for j in range(1, len(qs)):
        if qs[j] > qs[j_max]:
            j_max = j
    freqs = [max(0.0, c * q) for q in qs]
    open_gate(neuron, j_max)
    return j_max, freqs


def connect(graph: SynapticGraph, source: Neuron, action: int, target: Neuron) -> None:
    """Point the open synapse at the successor neuron, keeping fan-in exact.

    Re-pointing an existing edge moves one unit of fan-in from the old
    target to the new one; repeating the same edge is a no-op.
    """
    syn = source.synapses[action]
    if not syn.gate.is_open:
        raise ValueError(
            f"gate {action} of neuron {source.state_key} is closed; select before connecting"
        )
    if syn.target == target.state_key:
        return
    if syn.target is not None:
        graph.neurons[syn.target].fan_in -= 1
    syn.target = target.state_key
    target.fan_in += 1


def bellman_update(neuron: Neuron, action: int, reward: float, v_next: float,
                   alpha: float, gamma: float) -> tuple[float, float]:
    """Apply Q += alpha * (-Q + r + gamma * V') through the open gate,
    refresh the neuron's value function and close the gate."""
    syn = neuron.synapses[action]
    if not syn.gate.is_open:
        raise ValueError(
            f"gate {action} of neuron {neuron.state_key} is closed; select before updating"
        )
    for name, value in (("reward", reward), ("v_next", v_next),
                        ("alpha", alpha), ("gamma", gamma)):
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value}")
    syn.q += alpha * (-syn.q + reward + gamma * v_next)
    neuron.value = max(s.q for s in neuron.synapses)
    syn.gate.is_open = False
    return syn.q, neuron.value


def network_stats(graph: SynapticGraph) -> NetworkStats:
    n = len(graph.neurons)
    if n == 0:
        return NetworkStats(neurons=0, edges=0, avg_fan_in=0.0, parameter_count=0)
    edges = sum(1 for key in graph.population
                for syn in graph.neurons[key].synapses if syn.target is not None)
    total_fan_in = sum(graph.neurons[key].fan_in for key in graph.population)
    return NetworkStats(
        neurons=n,
        edges=edges,
        avg_fan_in=total_fan_in / n,
        parameter_count=parameter_count(n, graph.kappa),
    )


def graph_snapshot(graph: SynapticGraph) -> GraphSnapshot:
    snapshot = GraphSnapshot(name="synaptic")
    for key in graph.population:
        neuron = graph.neurons[key]
        snapshot.nodes.append((key, {"value": neuron.value, "fan_in": neuron.fan_in}))
    for key in graph.population:
        neuron = graph.neurons[key]
        for j, syn in enumerate(neuron.synapses):
            if syn.target is None:
                continue
            snapshot.edges.append((key, syn.target, {
                "action": j,
                "q": syn.q,
                "gate": "open" if syn.gate.is_open else "closed",
            }))
    return snapshot


class SynapticAgent:
    """Trainer-facing wrapper: lookup-or-spawn, select, connect-and-update."""

    kind = "synaptic"

    def __init__(self, kappa: int = 2, alpha: float = 0.9, gamma: float = 0.99,
                 c: float = 1.0, q_init: str = "optimistic",
                 rng: np.random.Generator | None = None, step_reward: float = 1.0):
        self.alpha = alpha
        self.c = c
        self.graph = SynapticGraph(kappa=kappa, gamma=gamma, q_init=q_init, rng=rng,
                                   step_reward=step_reward)

    @property
    def gamma(self) -> float:
        return self.graph.gamma

    def ensure(self, state_key: str) -> bool:
        if state_key in self.graph.neurons:
            return False
        spawn_neuron(self.graph, state_key)
        return True

    def select(self, state_key: str, forced: int | None = None) -> int:
        neuron = self.graph.neurons[state_key]
        if forced is None:
            action, _ = forward_select(neuron, self.c)
            return action
        open_gate(neuron, forced)
        return forced

    def update(self, state_key: str, action: int, reward: float,
               next_key: str, terminal: bool) -> None:
        neuron = self.graph.neurons[state_key]
        next_neuron = self.graph.neurons[next_key]
        connect(self.graph, neuron, action, next_neuron)
        v_next = 0.0 if terminal else next_neuron.value
        bellman_update(neuron, action, reward, v_next, self.alpha, self.gamma)

    def q_values(self, state_key: str) -> list[float]:
        return self.graph.neurons[state_key].q_values()

    def stats(self) -> NetworkStats:
        return network_stats(self.graph)

    def snapshot(self) -> GraphSnapshot:
        return graph_snapshot(self.graph)

    def serialize(self) -> dict:
        return {
            "kind": self.kind,
            "kappa": self.graph.kappa,
            "alpha": self.alpha,
            "gamma": self.graph.gamma,
            "c": self.c,
            "neurons": [
                {
                    "key": key,
                    "value": self.graph.neurons[key].value,
                    "fan_in": self.graph.neurons[key].fan_in,
                    "synapses": [
                        {"q": syn.q, "target": syn.target,
                         "gate": "open" if syn.gate.is_open else "closed"}
                        for syn in self.graph.neurons[key].synapses
                    ],
                }
                for key in self.graph.population
            ],
        }

    @classmethod
    def deserialize(cls, payload: dict) -> "SynapticAgent":
        # stored values overwrite the init, so any deterministic mode works
        agent = cls(kappa=payload["kappa"], alpha=payload["alpha"],
                    gamma=payload["gamma"], c=payload["c"], q_init="zeros")
        for entry in payload["neurons"]:
            neuron = spawn_neuron(agent.graph, entry["key"])
            neuron.value = entry["value"]
            neuron.fan_in = entry["fan_in"]
            for syn, stored in zip(neuron.synapses, entry["synapses"]):
                syn.q = stored["q"]
                syn.target = stored["target"]
                syn.gate.is_open = stored["gate"] == "open"
        return agent
