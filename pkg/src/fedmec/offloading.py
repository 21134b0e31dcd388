"""Per-UE computation offloading environment.

Each epoch the UE picks a channel (0 = run locally) and an energy level.
Tasks arrive Bernoulli, queue FIFO, and are served one at a time: locally
at the DVFS frequency bought by the allocated energy, or by uploading the
input bits at the Shannon rate and executing on the edge CPU. The reward
is the negative weighted cost of sojourn delay, energy, queue-overflow
drops and deadline failures incurred in the epoch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .wireless import ChannelModel, WirelessConfig, channel_step, shannon_rate

LOCAL = 0  # channel choice 0 executes on the UE


@dataclass(frozen=True)
class TaskSpec:
    input_bits: float = 1e6
    cycles: float = 1e9

    def __post_init__(self):
        if self.input_bits <= 0 or self.cycles <= 0:
            raise ValueError("task size fields must be positive")


@dataclass(frozen=True)
class UEConfig:
    arrival_prob: float = 0.5
    queue_capacity: int = 5
    energy_levels: tuple = (0.0, 0.5, 1.0, 1.5, 2.0)
    switched_capacitance: float = 1e-27
    epoch_seconds: float = 1.0
    max_sojourn_epochs: int = 10
    energy_norm_j: float = 1e5  # scales cumulative energy into the observation

    def __post_init__(self):
        if not 0.0 <= self.arrival_prob <= 1.0:
            raise ValueError(f"arrival_prob must be in [0,1], got {self.arrival_prob}")
        if self.queue_capacity < 1:
            raise ValueError("queue_capacity must be >= 1")
        levels = tuple(float(e) for e in self.energy_levels)
        if levels[0] != 0.0:
            raise ValueError("energy level 0 must be present (and first)")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError("energy levels must be strictly increasing")
        object.__setattr__(self, "energy_levels", levels)
        if self.switched_capacitance <= 0 or self.epoch_seconds <= 0:
            raise ValueError("switched_capacitance and epoch_seconds must be positive")
        if self.max_sojourn_epochs < 1:
            raise ValueError("max_sojourn_epochs must be >= 1")


@dataclass(frozen=True)
class EdgeConfig:
    edge_cpu_hz: float = 1e10

    def __post_init__(self):
        if self.edge_cpu_hz <= 0:
            raise ValueError("edge_cpu_hz must be positive")


@dataclass(frozen=True)
class UtilityWeights:
    delay: float = 1.0
    energy: float = 0.5
    drop: float = 5.0
    fail: float = 5.0

    def __post_init__(self):
        if min(self.delay, self.energy, self.drop, self.fail) < 0:
            raise ValueError("utility weights must be nonnegative")


@dataclass(frozen=True)
class EpochOutcome:
    """Costs incurred during one epoch."""
    delay_s: float = 0.0
    energy_j: float = 0.0
    drops: int = 0
    failures: int = 0


class Task:
    """A queued computation task and its progress."""

    __slots__ = ("remaining_bits", "remaining_cycles", "age")

    def __init__(self, remaining_bits, remaining_cycles, age=0):
        self.remaining_bits = remaining_bits
        self.remaining_cycles = remaining_cycles
        self.age = age

    def copy(self):
        return Task(self.remaining_bits, self.remaining_cycles, self.age)

    def __repr__(self):
        return f"Task(bits={self.remaining_bits}, cycles={self.remaining_cycles}, age={self.age})"


@dataclass
class NetworkState:
    """Observable network state of one UE."""

    tasks: list
    channel_levels: np.ndarray
    cum_energy_j: float = 0.0
    occupied_channel: int = 0  # 0 = none

    @property
    def queue_len(self) -> int:
        return len(self.tasks)

    @property
    def head_remaining_bits(self) -> float:
        return self.tasks[0].remaining_bits if self.tasks else 0.0

    @property
    def head_remaining_cycles(self) -> float:
        return self.tasks[0].remaining_cycles if self.tasks else 0.0

    def copy(self) -> "NetworkState":
        return NetworkState(tasks=[t.copy() for t in self.tasks],
                            channel_levels=self.channel_levels.copy(),
                            cum_energy_j=self.cum_energy_j,
                            occupied_channel=self.occupied_channel)

    @classmethod
    def initial(cls, num_channels: int, levels=None) -> "NetworkState":
        if levels is None:
            levels = np.zeros(num_channels, dtype=np.int64)
        return cls(tasks=[], channel_levels=np.asarray(levels, dtype=np.int64))


@dataclass(frozen=True)
class ControlAction:
    channel: int       # 0 = local, 1..M = wireless channel
    energy_index: int  # index into UEConfig.energy_levels


def flatten_action(action: ControlAction, num_energy_levels: int) -> int:
    return action.channel * num_energy_levels + action.energy_index


def unflatten_action(index: int, num_energy_levels: int) -> ControlAction:
    return ControlAction(index // num_energy_levels, index % num_energy_levels)


@dataclass
class OffloadConfig:
    """Everything the epoch dynamics need, bundled."""

    task: TaskSpec = field(default_factory=TaskSpec)
    ue: UEConfig = field(default_factory=UEConfig)
    edge: EdgeConfig = field(default_factory=EdgeConfig)
    weights: UtilityWeights = field(default_factory=UtilityWeights)
    wireless: WirelessConfig = field(default_factory=WirelessConfig)
    channel: ChannelModel = field(default_factory=ChannelModel.default)

    def __post_init__(self):
        # edge CPU must dominate anything the UE can buy with its top energy level
        top = local_cpu_freq(self.ue.energy_levels[-1], self.ue.switched_capacitance,
                             self.ue.epoch_seconds)
        if self.edge.edge_cpu_hz <= top:
            raise ValueError(
                f"edge_cpu_hz {self.edge.edge_cpu_hz:g} must exceed the max local "
                f"frequency {top:g}")

    @property
    def num_actions(self) -> int:
        return (self.wireless.num_channels + 1) * len(self.ue.energy_levels)


def generate_arrival(lambda_t: float, rng: np.random.Generator) -> bool:
    """Bernoulli task arrival (one stream draw)."""
    if not 0.0 <= lambda_t <= 1.0:
        raise ValueError(f"arrival probability must be in [0,1], got {lambda_t}")
    return rng.random() < lambda_t


def local_cpu_freq(energy_j: float, kappa: float, tau_s: float) -> float:
    """DVFS frequency bought by `energy_j` per epoch: f = (e / (kappa*tau))^(1/3)."""
    if energy_j < 0:
        raise ValueError(f"energy must be nonnegative, got {energy_j}")
    if kappa <= 0 or tau_s <= 0:
        raise ValueError("kappa and tau must be positive")
    return (energy_j / (kappa * tau_s)) ** (1.0 / 3.0)


def local_exec_time(cycles: float, f_l: float) -> float:
    """Seconds to run `cycles` locally; infinite when the CPU is unpowered."""
    if f_l < 0 or cycles < 0:
        raise ValueError("cycles and frequency must be nonnegative")
    if f_l == 0.0:
        return math.inf
    return cycles / f_l


def offload_exec_time(input_bits: float, rate_bps: float, cycles: float,
                      f_e: float) -> float:
    """Upload then edge execution: mu/rate + nu/f_E (result return neglected)."""
    if f_e <= 0:
        raise ValueError("edge frequency must be positive")
    if input_bits < 0 or rate_bps < 0 or cycles < 0:
        raise ValueError("bits, rate and cycles must be nonnegative")
    if rate_bps == 0.0 and input_bits > 0:
        return math.inf
    tx = input_bits / rate_bps if input_bits > 0 else 0.0
    return tx + cycles / f_e


def utility(outcome: EpochOutcome, weights: UtilityWeights) -> float:
    """Immediate utility: negative weighted epoch cost (0 for an idle epoch)."""
    if outcome.delay_s < 0 or outcome.energy_j < 0 or outcome.drops < 0 \
            or outcome.failures < 0:
        raise ValueError("epoch outcome fields must be nonnegative")
    cost = (weights.delay * outcome.delay_s
            + weights.energy * outcome.energy_j
            + weights.drop * outcome.drops
            + weights.fail * outcome.failures)
    return -cost if cost != 0.0 else 0.0


def _serve_epoch(tasks: list, action: ControlAction, cfg: OffloadConfig,
                 channel_levels: np.ndarray) -> dict:
    """Advance the head task for one epoch under `action`, mutating `tasks`.

    Returns service bookkeeping: completion time within the epoch (or None),
    cycles advanced locally / at the edge, and bits transmitted. Cycles form
    a single per-task pool, so work done locally before an offload switch is
    not redone at the edge.
    """
    tau = cfg.ue.epoch_seconds
    energy = cfg.ue.energy_levels[action.energy_index]
    out = {"finish_time": None, "cycles_local": 0.0, "cycles_edge": 0.0,
           "bits_sent": 0.0, "served": False}
    if not tasks:
        return out
    head = tasks[0]
    out["served"] = True
    if action.channel == LOCAL:
        f_l = local_cpu_freq(energy, cfg.ue.switched_capacitance, tau)
        if f_l > 0.0:
            advance = min(head.remaining_cycles, f_l * tau)
            head.remaining_cycles -= advance
            out["cycles_local"] = advance
            if head.remaining_cycles == 0.0:
                out["finish_time"] = advance / f_l
    else:
        level = int(channel_levels[action.channel - 1])
        rate = shannon_rate(cfg.wireless.per_channel_bandwidth_hz, energy / tau,
                            float(cfg.channel.gains[level]),
                            cfg.wireless.noise_power_w)
        t = 0.0
        if head.remaining_bits > 0.0:
            if rate <= 0.0:
                return out  # unpowered uplink: no progress this epoch
            t_need = head.remaining_bits / rate
            if t_need <= tau:
                out["bits_sent"] = head.remaining_bits
                head.remaining_bits = 0.0
                t = t_need
            else:
                sent = rate * tau
                out["bits_sent"] = sent
                head.remaining_bits -= sent
                t = tau
        if head.remaining_bits == 0.0 and t < tau:
            f_e = cfg.edge.edge_cpu_hz
            advance = min(head.remaining_cycles, f_e * (tau - t))
            head.remaining_cycles -= advance
            out["cycles_edge"] = advance
            if head.remaining_cycles == 0.0:
                out["finish_time"] = t + advance / f_e
    if out["finish_time"] is not None:
        tasks.pop(0)
    return out


def _advance_levels(levels: np.ndarray, model: ChannelModel,
                    rng: np.random.Generator):
    """Advance every channel level in place, one stream draw per channel.

    Batched equivalent of calling channel_step on channels 0..M-1 in order
    (Generator.random(m) yields the same doubles as m single draws).
    """
    us = rng.random(levels.shape[0])
    nxt = (model._cdf[levels] <= us[:, None]).sum(axis=1)
    np.minimum(nxt, model.num_levels - 1, out=nxt)
    levels[:] = nxt


def _close_epoch(tasks: list, service: dict, energy: float, drops: int,
                 cfg: OffloadConfig) -> EpochOutcome:
    """Account sojourn delay, age the queue and abort over-deadline tasks."""
    tau = cfg.ue.epoch_seconds
    delay = tau * len(tasks)  # every task still in the system spent the epoch in it
    if service["finish_time"] is not None:
        delay += service["finish_time"]
    failures = 0
    survivors = []
    for t in tasks:
        t.age += 1
        if t.age >= cfg.ue.max_sojourn_epochs:
            failures += 1
        else:
            survivors.append(t)
    tasks[:] = survivors
    return EpochOutcome(delay_s=delay, energy_j=energy, drops=drops,
                        failures=failures)


def offload_env_step(state: NetworkState, action: ControlAction,
                     cfg: OffloadConfig, rng: np.random.Generator):
    """One epoch of dynamics; returns (next_state, reward, info).

    Order: arrival draw (drop on full queue), service of the head task,
    energy accounting, delay/failure accounting, then all channel levels
    advance so the rates used above came from start-of-epoch gains.
    """
    if not 0 <= action.channel <= cfg.wireless.num_channels:
        raise ValueError(f"channel {action.channel} out of range")
    if not 0 <= action.energy_index < len(cfg.ue.energy_levels):
        raise ValueError(f"energy index {action.energy_index} out of range")
    nxt = state.copy()
    drops = 0
    if generate_arrival(cfg.ue.arrival_prob, rng):
        if len(nxt.tasks) >= cfg.ue.queue_capacity:
            drops = 1
        else:
            nxt.tasks.append(Task(cfg.task.input_bits, cfg.task.cycles))
    service = _serve_epoch(nxt.tasks, action, cfg, nxt.channel_levels)
    energy = cfg.ue.energy_levels[action.energy_index]
    nxt.cum_energy_j += energy
    outcome = _close_epoch(nxt.tasks, service, energy, drops, cfg)
    nxt.occupied_channel = action.channel if (service["served"] and
                                              action.channel != LOCAL) else 0
    _advance_levels(nxt.channel_levels, cfg.channel, rng)
    reward = float(utility(outcome, cfg.weights))
    info = {
        "outcome": outcome,
        "completed": 1 if service["finish_time"] is not None else 0,
        "cycles_local": service["cycles_local"],
        "cycles_edge": service["cycles_edge"],
        "bits_sent": service["bits_sent"],
    }
    return nxt, reward, info


def evaluate_epoch_utility(state: NetworkState, action: ControlAction,
                           cfg: OffloadConfig) -> float:
    """Deterministic one-epoch utility of `action`: arrivals excluded and
    channel levels frozen. Used by the greedy baseline."""
    tasks = [t.copy() for t in state.tasks]
    service = _serve_epoch(tasks, action, cfg, state.channel_levels)
    energy = cfg.ue.energy_levels[action.energy_index]
    outcome = _close_epoch(tasks, service, energy, 0, cfg)
    return utility(outcome, cfg.weights)


def _greedy_action(state: NetworkState, cfg: OffloadConfig) -> ControlAction:
    """Closed-form scan of the one-epoch utility over every (c, e) pair.

    Agrees with enumerating evaluate_epoch_utility but avoids copying the
    queue 55 times per decision; ties resolve to the smallest flattened
    index because the scan only accepts strict improvements.
    """
    ue, w = cfg.ue, cfg.weights
    tau = ue.epoch_seconds
    levels_e = ue.energy_levels
    tasks = state.tasks
    q_len = len(tasks)
    if q_len == 0:
        return ControlAction(LOCAL, 0)  # any energy spend only costs utility
    head_bits = tasks[0].remaining_bits
    head_cycles = tasks[0].remaining_cycles
    tail_fails = sum(1 for t in tasks[1:] if t.age + 1 >= ue.max_sojourn_epochs)
    head_fails = 1 if tasks[0].age + 1 >= ue.max_sojourn_epochs else 0
    f_e = cfg.edge.edge_cpu_hz
    # rate[e_idx, level], identical arithmetic to shannon_rate
    powers = np.asarray(levels_e) / tau
    rate = cfg.wireless.per_channel_bandwidth_hz * np.log2(
        1.0 + powers[:, None] * cfg.channel.gains[None, :]
        / cfg.wireless.noise_power_w)
    best_action, best_u = None, -math.inf
    for c in range(cfg.wireless.num_channels + 1):
        for e_idx, energy in enumerate(levels_e):
            finish = None
            if c == LOCAL:
                f_l = local_cpu_freq(energy, ue.switched_capacitance, tau)
                if f_l > 0.0 and head_cycles <= f_l * tau:
                    finish = head_cycles / f_l
            else:
                r = rate[e_idx, int(state.channel_levels[c - 1])]
                if head_bits > 0.0:
                    t = head_bits / r if r > 0.0 else math.inf
                else:
                    t = 0.0
                if t < tau and head_cycles <= f_e * (tau - t):
                    finish = t + head_cycles / f_e
            if finish is None:
                delay = tau * q_len
                fails = tail_fails + head_fails
            else:
                delay = tau * (q_len - 1) + finish
                fails = tail_fails
            u = -(w.delay * delay + w.energy * energy + w.drop * 0
                  + w.fail * fails)
            if u > best_u:
                best_action, best_u = ControlAction(c, e_idx), u
    return best_action


def baseline_offload_action(kind: str, state: NetworkState,
                            cfg: OffloadConfig) -> ControlAction:
    """Classic policies: mobile (always local, max energy), edge (best-gain
    channel, max energy), greedy (argmax of the immediate one-epoch utility,
    ties to the smallest flattened action index)."""
    top_energy = len(cfg.ue.energy_levels) - 1
    if kind == "mobile":
        return ControlAction(LOCAL, top_energy)
    if kind == "edge":
        best = int(np.argmax(state.channel_levels))
        return ControlAction(best + 1, top_energy)
    if kind == "greedy":
        return _greedy_action(state, cfg)
    raise ValueError(f"unknown baseline kind {kind!r}")


def encode_state(state: NetworkState, cfg: OffloadConfig) -> np.ndarray:
    """Normalize the network state into a feature vector for the agent."""
    m = cfg.wireless.num_channels
    obs = np.empty(5 + m)
    obs[0] = state.queue_len / cfg.ue.queue_capacity
    obs[1] = state.head_remaining_cycles / cfg.task.cycles
    obs[2] = state.head_remaining_bits / cfg.task.input_bits
    obs[3] = min(state.cum_energy_j / cfg.ue.energy_norm_j, 1.0)
    obs[4] = state.occupied_channel / m
    obs[5:] = state.channel_levels / (cfg.channel.num_levels - 1)
    return obs
