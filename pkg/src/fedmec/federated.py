"""FedAvg coordination over DRL clients, with exact communication ledgers.

Clients train locally and exchange only MainNet parameter vectors; the
server merges them with a sample-count-weighted average. A centralized
comparator instead ships every raw transition to one shared learner.
Every bit that crosses the uplink or downlink is counted, so the
transmission-cost comparison is exact by construction.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

PARAM_BITS = 64
CHECKPOINT_MAGIC = b"IEAI"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<4sIIHH")  # magic, version, d_in, hidden, out


def params_checksum(params: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(params, dtype=float).tobytes()).hexdigest()[:16]


def transition_record_bits(state_dim: int) -> int:
    """Bits to ship one transition: two state vectors plus action, reward,
    terminal flag, each as a 64-bit word."""
    return 2 * state_dim * 64 + 3 * 64


@dataclass
class ClientUpdate:
    client_id: int
    params: np.ndarray
    sample_count: int  # transitions gathered since the last round

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float)
        if self.sample_count < 0:
            raise ValueError("sample_count must be nonnegative")

    @property
    def uplink_bits(self) -> int:
        return self.params.size * PARAM_BITS


@dataclass(frozen=True)
class FedConfig:
    round_period: int = 2500   # environment steps per client per round
    client_fraction: float = 1.0

    def __post_init__(self):
        if self.round_period < 1:
            raise ValueError("round_period must be >= 1")
        if not 0.0 < self.client_fraction <= 1.0:
            raise ValueError(
                f"client_fraction must be in (0, 1], got {self.client_fraction}")

    def participants_per_round(self, num_clients: int) -> int:
        return max(1, round(self.client_fraction * num_clients))


@dataclass
class CommsLedger:
    """Cumulative uplink/downlink bit counters for one run."""

    mode: str = ""
    uplink_bits: int = 0
    downlink_bits: int = 0

    def charge_uplink(self, bits: int):
        if bits < 0:
            raise ValueError("cannot charge negative bits")
        self.uplink_bits += bits

    def charge_downlink(self, bits: int):
        if bits < 0:
            raise ValueError("cannot charge negative bits")
        self.downlink_bits += bits


def fedavg(updates: list) -> np.ndarray:
    """Sample-count-weighted elementwise mean of client parameter vectors.

    Updates are summed in client-id order, so the merge is bit-identical
    under any permutation of the input list. All-zero sample counts fall
    back to the unweighted mean.
    """
    if not updates:
        raise ValueError("fedavg needs at least one update")
    length = updates[0].params.size
    for u in updates:
        if u.params.size != length:
            raise ValueError(f"client {u.client_id}: parameter length "
                             f"{u.params.size} != {length}")
    ordered = sorted(updates, key=lambda u: u.client_id)
    total = sum(u.sample_count for u in ordered)
    if total == 0:
        weights = [1.0 / len(ordered)] * len(ordered)
    else:
        weights = [u.sample_count / total for u in ordered]
    merged = np.zeros(length)
    for w, u in zip(weights, ordered):
        merged += w * u.params
    return merged


def sample_clients(num_clients: int, fraction: float,
                   rng: np.random.Generator) -> list:
    """Uniform sample without replacement of max(1, round(fraction*K)) ids,
    sorted; one combinatorial draw from the stream."""
    if num_clients < 1:
        raise ValueError("num_clients must be >= 1")
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    size = max(1, round(fraction * num_clients))
    picked = rng.choice(num_clients, size=size, replace=False)
    return sorted(int(i) for i in picked)


@dataclass
class RoundReport:
    participants: list
    broadcast_checksum: str
    merged_checksum: str
    sample_counts: dict
    mean_losses: dict
    start_checksums: dict
    uplink_bits_delta: int
    downlink_bits_delta: int


def fed_round(server_params: np.ndarray, clients: list, fed_config: FedConfig,
              ledger: CommsLedger, rng: np.random.Generator):
    """One federated round: sample participants, broadcast, train locally,
    aggregate. Returns (merged params, RoundReport).

    Clients must expose client_id, set_params(vec), get_params(), and
    run_local(steps) -> (sample_count, mean_loss). Each client owns its
    state and streams, so the merged result does not depend on the order
    clients are listed or executed in.
    """
    by_id = {c.client_id: c for c in clients}
    if len(by_id) != len(clients):
        raise ValueError("client ids must be distinct")
    ids = sample_clients(len(clients), fed_config.client_fraction, rng)
    all_ids = sorted(by_id)
    participants = [by_id[all_ids[i]] for i in ids]
    broadcast_sum = params_checksum(server_params)
    up0, down0 = ledger.uplink_bits, ledger.downlink_bits
    updates, losses, starts = [], {}, {}
    for client in participants:
        client.set_params(server_params)
        ledger.charge_downlink(server_params.size * PARAM_BITS)
        starts[client.client_id] = params_checksum(client.get_params())
        try:
            n_k, mean_loss = client.run_local(fed_config.round_period)
        except Exception as exc:
            raise RuntimeError(f"client {client.client_id} failed mid-round") from exc
        update = ClientUpdate(client.client_id, client.get_params(), n_k)
        ledger.charge_uplink(update.uplink_bits)
        updates.append(update)
        losses[client.client_id] = mean_loss
    merged = fedavg(updates)
    report = RoundReport(
        participants=[c.client_id for c in participants],
        broadcast_checksum=broadcast_sum,
        merged_checksum=params_checksum(merged),
        sample_counts={u.client_id: u.sample_count for u in updates},
        mean_losses=losses,
        start_checksums=starts,
        uplink_bits_delta=ledger.uplink_bits - up0,
        downlink_bits_delta=ledger.downlink_bits - down0,
    )
    return merged, report


def centralized_train(adapters: list, agent, steps: int, ledger: CommsLedger,
                      loss_sink=None, reward_sink=None):
    """Comparator: every transition from every environment is shipped to one
    shared agent (uplink charged per transition record) and trained on with
    the same hyperparameters. Environments advance in lockstep, one step
    each per global step, so they consume exactly the same random streams
    as a federated run over the same scenario.
    """
    record_bits = transition_record_bits(agent.input_dim)
    period = agent.config.train_period
    transitions = 0
    for _ in range(steps):
        for i, adapter in enumerate(adapters):
            tr = adapter.advance(agent.act)
            ledger.charge_uplink(record_bits)
            agent.remember(*tr)
            if reward_sink is not None:
                reward_sink(i, tr[2])
            transitions += 1
            if transitions % period == 0:
                loss = agent.train_step()
                if loss is not None and loss_sink is not None:
                    loss_sink(transitions, loss)
    return agent


def save_checkpoint(path, params: np.ndarray, input_dim: int, hidden_dim: int,
                    output_dim: int):
    """Flat little-endian float64 parameter vector with a 16-byte header."""
    header = _HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, input_dim,
                          hidden_dim, output_dim)
    data = np.ascontiguousarray(params, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data)


def load_checkpoint(path):
    """Returns (params, input_dim, hidden_dim, output_dim)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError("checkpoint file truncated")
    magic, version, d_in, hidden, out = _HEADER.unpack(raw[:_HEADER.size])
    if magic != CHECKPOINT_MAGIC:
        raise ValueError(f"bad checkpoint magic {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    params = np.frombuffer(raw[_HEADER.size:], dtype="<f8").astype(float)
    expected = hidden * d_in + hidden + out * hidden + out
    if params.size != expected:
        raise ValueError(f"checkpoint holds {params.size} values, expected {expected}")
    return params, d_in, hidden, out
