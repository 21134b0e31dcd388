"""Experiment orchestration: config parsing, seeded scenario construction,
training/evaluation loops for every mode, and metrics emission.

A run is fully determined by (config, master seed): every random stream is
derived from the seed plus a purpose label, so rerunning a spec reproduces
the metrics files byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import caching, federated
from .agent import AgentConfig, DqnAgent, MLPParams
from .caching import CacheState, ContentCatalog, baseline_cache_step, cache_env_step, observe
from .federated import CommsLedger, FedConfig, PARAM_BITS, params_checksum
from .offloading import (NetworkState, OffloadConfig, TaskSpec, UEConfig,
                         EdgeConfig, UtilityWeights, baseline_offload_action,
                         encode_state, offload_env_step, unflatten_action)
from .wireless import ChannelModel, WirelessConfig, birth_death_matrix

METRICS_INTERVAL = 1000
SYSTEM_CLIENT = -1  # client_id for run-wide records (bit counters, loss of a shared agent)

CACHE_BASELINES = ("lru", "lfu", "fifo")
OFFLOAD_BASELINES = ("mobile", "edge", "greedy")

# Offloading defaults deliberately put the per-task SNR near the knee of the
# log2 curve: only the best gain level completes a task cheaply within one
# epoch, so a myopic policy pays for ignoring queue buildup.
OFFLOAD_GAIN_SCALE = 1e-10
OFFLOAD_INPUT_BITS = 1.2e6


class ConfigError(Exception):
    """Raised for malformed, out-of-range, or unknown configuration."""


@dataclass
class ExperimentSpec:
    scenario: str = "caching"
    mode: str = "federated"
    master_seed: int = 42
    train_steps: int = None
    eval_steps: int = None
    num_clients: int = None
    out_dir: str = "runs"
    # wireless
    num_levels: int = 6
    gain_scale: float = None          # scenario default
    total_bandwidth_hz: float = 5e6
    num_channels: int = 10
    noise_power_w: float = 1e-10
    stay_prob: float = 0.6
    move_prob: float = 0.2
    gains: list = None                # overrides gain_scale scaling when set
    # catalog / cache
    num_contents: int = 50
    zipf_alpha: float = 1.58
    cache_capacity: int = 5
    window: int = 1000
    reshuffle_period: int = 0
    # task / ue / edge / weights
    task_input_bits: float = None     # scenario default
    task_cycles: float = 1e9
    arrival_prob: float = 0.5
    queue_capacity: int = 5
    energy_levels: list = field(default_factory=lambda: [0.0, 0.5, 1.0, 1.5, 2.0])
    switched_capacitance: float = 1e-27
    epoch_seconds: float = 1.0
    max_sojourn_epochs: int = 10
    energy_norm_j: float = 1e5
    edge_cpu_hz: float = 1e10
    w_delay: float = 1.0
    w_energy: float = 0.5
    w_drop: float = 5.0
    w_fail: float = 5.0
    # agent / fed
    agent: AgentConfig = field(default_factory=AgentConfig)
    fed: FedConfig = field(default_factory=FedConfig)

    def __post_init__(self):
        if self.scenario not in ("caching", "offloading"):
            raise ConfigError(f"scenario: must be 'caching' or 'offloading', "
                              f"got {self.scenario!r}")
        valid_modes = {"federated", "centralized"}
        baselines = CACHE_BASELINES if self.scenario == "caching" else OFFLOAD_BASELINES
        if self.mode not in valid_modes:
            if not self.mode.startswith("baseline:") or \
                    self.mode.split(":", 1)[1] not in baselines:
                raise ConfigError(
                    f"mode: must be federated, centralized, or baseline:<name> "
                    f"with name in {baselines} for {self.scenario}, got {self.mode!r}")
        if self.train_steps is None:
            self.train_steps = 200_000 if self.scenario == "caching" else 50_000
        if self.eval_steps is None:
            self.eval_steps = 50_000 if self.scenario == "caching" else 10_000
        if self.num_clients is None:
            self.num_clients = 6 if self.scenario == "caching" else 10
        if self.gain_scale is None:
            self.gain_scale = OFFLOAD_GAIN_SCALE
        if self.task_input_bits is None:
            self.task_input_bits = OFFLOAD_INPUT_BITS
        for name in ("train_steps", "eval_steps"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name}: must be >= 0, got {getattr(self, name)}")
        if self.num_clients < 1:
            raise ConfigError(f"num_clients: must be >= 1, got {self.num_clients}")

    @property
    def baseline_name(self):
        return self.mode.split(":", 1)[1] if self.mode.startswith("baseline:") else None

    @property
    def run_id(self) -> str:
        return f"{self.scenario}-{self.mode.replace(':', '-')}-s{self.master_seed}"

    def channel_model(self) -> ChannelModel:
        if self.gains is not None:
            gains = np.asarray(self.gains, dtype=float)
        else:
            gains = 2.0 ** np.arange(self.num_levels) * self.gain_scale
        return ChannelModel(gains=gains,
                            transition=birth_death_matrix(self.num_levels,
                                                          self.stay_prob,
                                                          self.move_prob))

    def catalog(self) -> ContentCatalog:
        return ContentCatalog(self.num_contents, self.zipf_alpha)

    def offload_config(self) -> OffloadConfig:
        return OffloadConfig(
            task=TaskSpec(self.task_input_bits, self.task_cycles),
            ue=UEConfig(self.arrival_prob, self.queue_capacity,
                        tuple(self.energy_levels), self.switched_capacitance,
                        self.epoch_seconds, self.max_sojourn_epochs,
                        self.energy_norm_j),
            edge=EdgeConfig(self.edge_cpu_hz),
            weights=UtilityWeights(self.w_delay, self.w_energy, self.w_drop,
                                   self.w_fail),
            wireless=WirelessConfig(self.total_bandwidth_hz, self.num_channels,
                                    self.noise_power_w),
            channel=self.channel_model(),
        )


# config file schema: section -> key -> (spec attribute, type tag)
_TOP_KEYS = {
    "scenario": ("scenario", "str"),
    "mode": ("mode", "str"),
    "master_seed": ("master_seed", "int"),
    "train_steps": ("train_steps", "int"),
    "eval_steps": ("eval_steps", "int"),
    "num_clients": ("num_clients", "int"),
    "out_dir": ("out_dir", "str"),
}
_SECTIONS = {
    "wireless": {
        "num_levels": ("num_levels", "int"),
        "gain_scale": ("gain_scale", "num"),
        "gains": ("gains", "list"),
        "total_bandwidth_hz": ("total_bandwidth_hz", "num"),
        "num_channels": ("num_channels", "int"),
        "noise_power_w": ("noise_power_w", "num"),
        "stay_prob": ("stay_prob", "num"),
        "move_prob": ("move_prob", "num"),
    },
    "catalog": {
        "num_contents": ("num_contents", "int"),
        "zipf_alpha": ("zipf_alpha", "num"),
    },
    "cache": {
        "capacity": ("cache_capacity", "int"),
        "window": ("window", "int"),
        "reshuffle_period": ("reshuffle_period", "int"),
    },
    "task": {
        "input_bits": ("task_input_bits", "num"),
        "cycles": ("task_cycles", "num"),
    },
    "ue": {
        "arrival_prob": ("arrival_prob", "num"),
        "queue_capacity": ("queue_capacity", "int"),
        "energy_levels": ("energy_levels", "list"),
        "switched_capacitance": ("switched_capacitance", "num"),
        "epoch_seconds": ("epoch_seconds", "num"),
        "max_sojourn_epochs": ("max_sojourn_epochs", "int"),
        "energy_norm_j": ("energy_norm_j", "num"),
    },
    "edge": {
        "edge_cpu_hz": ("edge_cpu_hz", "num"),
    },
    "weights": {
        "delay": ("w_delay", "num"),
        "energy": ("w_energy", "num"),
        "drop": ("w_drop", "num"),
        "fail": ("w_fail", "num"),
    },
    "agent": {
        "hidden_dim": ("hidden_dim", "int"),
        "learning_rate": ("learning_rate", "num"),
        "discount": ("discount", "num"),
        "epsilon": ("epsilon", "num"),
        "batch_size": ("batch_size", "int"),
        "target_sync_period": ("target_sync_period", "int"),
        "replay_capacity": ("replay_capacity", "int"),
        "train_period": ("train_period", "int"),
        "grad_clip": ("grad_clip", "num"),
        "epsilon_anneal_steps": ("epsilon_anneal_steps", "int"),
        "epsilon_start": ("epsilon_start", "num"),
    },
    "fed": {
        "round_period": ("round_period", "int"),
        "client_fraction": ("client_fraction", "num"),
    },
}


def _check_type(path, value, tag):
    if tag == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
    elif tag == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
    elif tag == "num":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
    elif tag == "list":
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {value!r}")


def spec_from_dict(data: dict) -> ExperimentSpec:
    """Build a validated ExperimentSpec; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    kwargs = {}
    agent_kwargs, fed_kwargs = {}, {}
    for key, value in data.items():
        if key in _TOP_KEYS:
            attr, tag = _TOP_KEYS[key]
            _check_type(key, value, tag)
            kwargs[attr] = value
        elif key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"{key}: expected an object")
            schema = _SECTIONS[key]
            for sub, sub_value in value.items():
                if sub not in schema:
                    raise ConfigError(f"unknown key '{key}.{sub}'")
                attr, tag = schema[sub]
                _check_type(f"{key}.{sub}", sub_value, tag)
                if key == "agent":
                    agent_kwargs[attr] = sub_value
                elif key == "fed":
                    fed_kwargs[attr] = sub_value
                else:
                    kwargs[attr] = sub_value
        else:
            raise ConfigError(f"unknown key '{key}'")
    try:
        if agent_kwargs:
            kwargs["agent"] = AgentConfig(**agent_kwargs)
        if fed_kwargs:
            kwargs["fed"] = FedConfig(**fed_kwargs)
        return ExperimentSpec(**kwargs)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentSpec:
    """Parse and validate a JSON config file (omitted fields take defaults)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return spec_from_dict(data)


def derive_stream(master_seed: int, label: str) -> np.random.Generator:
    """Deterministic independent stream keyed by (seed, label)."""
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng(np.random.SeedSequence([master_seed, *words]))


@dataclass(frozen=True)
class MetricsRecord:
    run_id: str
    scenario: str
    mode: str
    client_id: int
    step: int
    metric_name: str
    value: float


@dataclass
class MetricsReport:
    run_id: str
    scenario: str
    mode: str
    master_seed: int
    records: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    wall_clock_seconds: float = 0.0  # kept out of emitted files for determinism
    final_params: np.ndarray = None
    agent_dims: tuple = None


class _Recorder:
    """Appends MetricsRecords and accumulates per-interval statistics."""

    def __init__(self, report: MetricsReport, reward_metric: str):
        self.report = report
        self.reward_metric = reward_metric
        self._acc = {}

    def add(self, client_id, step, name, value):
        if not isinstance(value, int) or isinstance(value, bool):
            value = float(value)
        r = self.report
        r.records.append(MetricsRecord(r.run_id, r.scenario, r.mode, client_id,
                                       step, name, value))

    def on_step(self, client_id, reward):
        acc = self._acc.setdefault(client_id, [0, 0.0, 0.0, 0])
        acc[0] += 1
        acc[1] += reward
        if acc[0] % METRICS_INTERVAL == 0:
            self.add(client_id, acc[0], self.reward_metric, acc[1] / METRICS_INTERVAL)
            if acc[3]:
                self.add(client_id, acc[0], "loss", acc[2] / acc[3])
            acc[1] = 0.0
            acc[2] = 0.0
            acc[3] = 0

    def on_loss(self, client_id, loss):
        acc = self._acc.setdefault(client_id, [0, 0.0, 0.0, 0])
        acc[2] += loss
        acc[3] += 1


class CacheClientAdapter:
    """Per-request MDP driver for one edge node.

    Pre-draws the pending request so each advance yields one complete
    transition: the decision observation, the applied action, the reward,
    and the next decision observation. The agent sees the cached slots
    sorted by ascending window frequency (chosen eviction targets map back
    to physical slots), which makes the replacement policy invariant to
    slot order and far easier to learn than raw positional features.
    """

    def __init__(self, catalog: ContentCatalog, capacity: int, window: int,
                 rng: np.random.Generator, reshuffle_period: int = 0):
        self.catalog = catalog
        self.state = CacheState(capacity=capacity, window_size=window)
        self.rng = rng
        self.reshuffle_period = reshuffle_period
        self.steps = 0
        self.num_actions = capacity + 1
        self.obs_dim = capacity + 1
        self.mask = None  # every action is always valid
        self._request = self.catalog.sample(self.rng)

    def _view(self, request):
        """Frequency-sorted observation plus the view->physical slot map."""
        obs = observe(self.state, request)
        order = np.argsort(obs[:len(self.state.slots)], kind="stable")
        view = obs.copy()
        view[:order.size] = obs[order]
        return view, order

    def advance(self, choose):
        request = self._request
        obs, order = self._view(request)
        if request in self.state.slots:
            action = caching.BYPASS  # hits never query the policy
            view_action = caching.BYPASS
        else:
            view_action = choose(obs, self.mask)
            if view_action == caching.BYPASS or view_action > order.size:
                action = view_action
            else:
                action = int(order[view_action - 1]) + 1
        _, reward, _hit = cache_env_step(self.state, request, action)
        self._finish_step()
        next_obs, _ = self._view(self._request)
        return obs, view_action, reward, next_obs, False, self.mask

    def step_baseline(self, policy: str) -> float:
        """One request under a classic policy on the same request stream."""
        hit = baseline_cache_step(policy, self.state, self._request)
        self._finish_step()
        return 1.0 if hit else 0.0

    def _finish_step(self):
        self.steps += 1
        if self.reshuffle_period and self.steps % self.reshuffle_period == 0:
            self.catalog.reshuffle(self.rng)
        self._request = self.catalog.sample(self.rng)


def make_offload_initial_state(cfg: OffloadConfig, rng) -> NetworkState:
    levels = rng.integers(0, cfg.channel.num_levels, size=cfg.wireless.num_channels)
    return NetworkState.initial(cfg.wireless.num_channels, levels)


class OffloadClientAdapter:
    """Epoch-step driver for one UE."""

    def __init__(self, cfg: OffloadConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.state = make_offload_initial_state(cfg, rng)
        self.steps = 0
        self.num_actions = cfg.num_actions
        self.obs_dim = 5 + cfg.wireless.num_channels
        self.mask = None  # every action is always valid
        self._obs = encode_state(self.state, cfg)

    def advance(self, choose):
        obs = self._obs
        action_index = choose(obs, self.mask)
        action = unflatten_action(action_index, len(self.cfg.ue.energy_levels))
        self.state, reward, _info = offload_env_step(self.state, action, self.cfg,
                                                     self.rng)
        self.steps += 1
        self._obs = encode_state(self.state, self.cfg)
        return obs, action_index, reward, self._obs, False, self.mask

    def step_baseline(self, kind: str) -> float:
        """One epoch under a classic policy on the same environment stream."""
        action = baseline_offload_action(kind, self.state, self.cfg)
        self.state, reward, _info = offload_env_step(self.state, action, self.cfg,
                                                     self.rng)
        self.steps += 1
        self._obs = encode_state(self.state, self.cfg)
        return reward


class SimClient:
    """A federated client: one environment adapter plus one learner."""

    def __init__(self, client_id: int, adapter, agent: DqnAgent,
                 recorder: _Recorder):
        self.client_id = client_id
        self.adapter = adapter
        self.agent = agent
        self.recorder = recorder
        self.local_step = 0

    def set_params(self, params):
        self.agent.set_params_flat(params)

    def get_params(self):
        return self.agent.get_params_flat()

    def run_local(self, steps: int):
        """Interact and train for `steps` environment steps; returns the
        number of new transitions and the mean training loss (or None)."""
        loss_sum, loss_n = 0.0, 0
        period = self.agent.config.train_period
        for _ in range(steps):
            tr = self.adapter.advance(self.agent.act)
            self.agent.remember(*tr)
            self.local_step += 1
            self.recorder.on_step(self.client_id, tr[2])
            if self.local_step % period == 0:
                loss = self.agent.train_step()
                if loss is not None:
                    loss_sum += loss
                    loss_n += 1
                    self.recorder.on_loss(self.client_id, loss)
        return steps, (loss_sum / loss_n if loss_n else None)

    def run_frozen(self, steps: int) -> float:
        """Greedy evaluation; no training, no remembering, no stream draws
        beyond the environment's own."""
        total = 0.0
        for _ in range(steps):
            tr = self.adapter.advance(self.agent.act_greedy)
            total += tr[2]
        return total / steps if steps else 0.0


def _build_adapters(spec: ExperimentSpec):
    if spec.scenario == "caching":
        return [CacheClientAdapter(spec.catalog(), spec.cache_capacity, spec.window,
                                   derive_stream(spec.master_seed, f"cache-env-{i}"),
                                   spec.reshuffle_period)
                for i in range(spec.num_clients)]
    cfg = spec.offload_config()
    return [OffloadClientAdapter(cfg, derive_stream(spec.master_seed, f"offload-env-{i}"))
            for i in range(spec.num_clients)]


def _reward_metric(spec: ExperimentSpec) -> str:
    return "hit_rate" if spec.scenario == "caching" else "avg_utility"


def _run_federated(spec: ExperimentSpec, adapters, report, recorder, ledger):
    agent_cfg = spec.agent
    clients = [SimClient(i, adapters[i],
                         DqnAgent(adapters[i].obs_dim, adapters[i].num_actions,
                                  agent_cfg,
                                  derive_stream(spec.master_seed, f"agent-{i}")),
                         recorder)
               for i in range(spec.num_clients)]
    init_rng = derive_stream(spec.master_seed, "server-init")
    server = MLPParams.init(adapters[0].obs_dim, agent_cfg.hidden_dim,
                            adapters[0].num_actions, init_rng).to_flat()
    sampler = derive_stream(spec.master_seed, "fed-sampler")
    full, rem = divmod(spec.train_steps, spec.fed.round_period)
    periods = [spec.fed.round_period] * full + ([rem] if rem else [])
    done = 0
    for period in periods:
        fed_cfg = spec.fed if period == spec.fed.round_period \
            else replace(spec.fed, round_period=period)
        server, round_report = federated.fed_round(server, clients, fed_cfg,
                                                   ledger, sampler)
        done += period
        recorder.add(SYSTEM_CLIENT, done, "round_uplink_bits", ledger.uplink_bits)
        recorder.add(SYSTEM_CLIENT, done, "round_downlink_bits", ledger.downlink_bits)
        if round_report.start_checksums and \
                any(c != round_report.broadcast_checksum
                    for c in round_report.start_checksums.values()):
            raise RuntimeError("client started a round off the broadcast parameters")
    # everyone evaluates the final merged model
    for client in clients:
        client.set_params(server)
        ledger.charge_downlink(server.size * PARAM_BITS)
    report.final_params = server
    report.agent_dims = (adapters[0].obs_dim, agent_cfg.hidden_dim,
                         adapters[0].num_actions)
    return clients


def _run_centralized(spec: ExperimentSpec, adapters, report, recorder, ledger):
    agent = DqnAgent(adapters[0].obs_dim, adapters[0].num_actions, spec.agent,
                     derive_stream(spec.master_seed, "agent-central"))
    federated.centralized_train(
        adapters, agent, spec.train_steps, ledger,
        loss_sink=lambda step, loss: recorder.on_loss(SYSTEM_CLIENT, loss),
        reward_sink=recorder.on_step)
    report.final_params = agent.get_params_flat()
    report.agent_dims = (agent.input_dim, spec.agent.hidden_dim, agent.num_actions)
    return [SimClient(i, adapters[i], agent, recorder)
            for i in range(spec.num_clients)]


def _run_baseline(spec: ExperimentSpec, adapters, recorder):
    """Advance every client through the training phase under the classic
    policy (no learning; warms caches and queues), recording metrics."""
    name = spec.baseline_name
    for i, ad in enumerate(adapters):
        for _ in range(spec.train_steps):
            recorder.on_step(i, ad.step_baseline(name))


def _eval_baseline(spec: ExperimentSpec, adapters):
    name = spec.baseline_name
    means = []
    for ad in adapters:
        total = 0.0
        for _ in range(spec.eval_steps):
            total += ad.step_baseline(name)
        means.append(total / spec.eval_steps if spec.eval_steps else 0.0)
    return means


def run_experiment(spec: ExperimentSpec) -> MetricsReport:
    """Train per the spec's mode, then evaluate frozen policies; returns the
    full metrics report. Deterministic given (spec, master_seed)."""
    t0 = time.perf_counter()
    report = MetricsReport(spec.run_id, spec.scenario, spec.mode, spec.master_seed)
    recorder = _Recorder(report, _reward_metric(spec))
    adapters = _build_adapters(spec)
    ledger = CommsLedger(mode=spec.mode)
    eval_name = "eval_hit_rate" if spec.scenario == "caching" else "eval_avg_utility"
    end_step = spec.train_steps + spec.eval_steps

    if spec.mode == "federated":
        clients = _run_federated(spec, adapters, report, recorder, ledger)
    elif spec.mode == "centralized":
        clients = _run_centralized(spec, adapters, report, recorder, ledger)
    else:
        clients = None
        _run_baseline(spec, adapters, recorder)

    if clients is None:
        eval_means = _eval_baseline(spec, adapters)
    else:
        before = params_checksum(report.final_params)
        eval_means = [c.run_frozen(spec.eval_steps) for c in clients]
        after = params_checksum(clients[0].get_params())
        if after != before:
            raise RuntimeError("evaluation mutated agent parameters")
        report.summary["eval_params_checksum"] = before

    for i, mean in enumerate(eval_means):
        mean = float(mean)
        recorder.add(i, end_step, eval_name, mean)
        report.summary[f"{eval_name}[{i}]"] = mean
    recorder.add(SYSTEM_CLIENT, end_step, "uplink_bits", ledger.uplink_bits)
    recorder.add(SYSTEM_CLIENT, end_step, "downlink_bits", ledger.downlink_bits)
    report.summary["uplink_bits"] = ledger.uplink_bits
    report.summary["downlink_bits"] = ledger.downlink_bits
    report.summary[f"{eval_name}_mean"] = (float(sum(eval_means) / len(eval_means))
                                           if eval_means else 0.0)

    for ad in adapters:
        if ad.steps != end_step:
            raise RuntimeError(f"environment consumed {ad.steps} steps, "
                               f"expected {end_step}")
    report.wall_clock_seconds = time.perf_counter() - t0
    return report


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def emit_metrics(report: MetricsReport, fmt: str, path):
    """Write the records as CSV or JSONL with the documented column order."""
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["run_id", "scenario", "mode", "client_id", "step",
                             "metric_name", "value"])
            for r in report.records:
                writer.writerow([r.run_id, r.scenario, r.mode, r.client_id,
                                 r.step, r.metric_name, _format_value(r.value)])
    elif fmt == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for r in report.records:
                fh.write(json.dumps({
                    "run_id": r.run_id, "scenario": r.scenario, "mode": r.mode,
                    "client_id": r.client_id, "step": r.step,
                    "metric_name": r.metric_name, "value": r.value,
                }) + "\n")
    else:
        raise ConfigError(f"format: must be 'csv' or 'jsonl', got {fmt!r}")
