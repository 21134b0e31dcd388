import math

import numpy as np
import pytest

from fedmec.offloading import (ControlAction, EdgeConfig, EpochOutcome,
                               NetworkState, OffloadConfig, Task, TaskSpec,
                               UEConfig, UtilityWeights, baseline_offload_action,
                               evaluate_epoch_utility, flatten_action,
                               generate_arrival, local_cpu_freq, local_exec_time,
                               offload_env_step, offload_exec_time,
                               unflatten_action, utility)
from fedmec.wireless import ChannelModel, WirelessConfig, birth_death_matrix


def make_cfg(**kw):
    return OffloadConfig(**kw)


def frozen_cfg(gain_at_level1=1.5e-10, arrival=0.0):
    """Identity channel transitions so levels never move; level 1 gain is
    chosen so p=2 W gives SNR 3, i.e. rate exactly 1e6 bps on W=5e5 Hz."""
    gains = np.array([gain_at_level1 / 3, gain_at_level1, gain_at_level1 * 3,
                      gain_at_level1 * 9, gain_at_level1 * 27, gain_at_level1 * 81])
    chan = ChannelModel(gains=gains, transition=np.eye(6))
    return make_cfg(ue=UEConfig(arrival_prob=arrival),
                    channel=chan)


def state_with_tasks(cfg, tasks, levels=None):
    if levels is None:
        levels = np.ones(cfg.wireless.num_channels, dtype=np.int64)
    st = NetworkState.initial(cfg.wireless.num_channels, levels)
    st.tasks = tasks
    return st


def test_generate_arrival_degenerate():
    rng = np.random.default_rng(0)
    assert not any(generate_arrival(0.0, rng) for _ in range(100))
    assert all(generate_arrival(1.0, rng) for _ in range(100))
    with pytest.raises(ValueError):
        generate_arrival(1.5, rng)


def test_generate_arrival_mean():
    rng = np.random.default_rng(42)
    n = 1_000_000
    mean = sum(generate_arrival(0.5, rng) for _ in range(n)) / n
    assert abs(mean - 0.5) < 0.002


def test_local_cpu_freq():
    assert local_cpu_freq(0.0, 1e-27, 1.0) == 0.0
    assert local_cpu_freq(1.0, 1e-27, 1.0) == pytest.approx(1e9, rel=1e-12)
    # oracle: cube root evaluated independently
    assert local_cpu_freq(0.5, 1e-27, 1.0) == pytest.approx(
        math.exp(math.log(0.5e27) / 3.0), rel=1e-12)
    assert local_cpu_freq(0.5, 1e-27, 1.0) == pytest.approx(793700525.9840988)
    with pytest.raises(ValueError):
        local_cpu_freq(-0.1, 1e-27, 1.0)
    with pytest.raises(ValueError):
        local_cpu_freq(1.0, 0.0, 1.0)


def test_local_exec_time():
    assert local_exec_time(1e9, 1e9) == pytest.approx(1.0)
    assert local_exec_time(1e9, 2e9) == pytest.approx(0.5)
    assert local_exec_time(1e9, 0.0) == math.inf  # unpowered CPU: no progress
    f = local_cpu_freq(1.0, 1e-27, 1.0)
    assert local_exec_time(2e9, f) == pytest.approx(2.0, rel=1e-12)


def test_offload_exec_time():
    assert offload_exec_time(1e6, 1e6, 1e9, 1e10) == pytest.approx(1.1)
    assert offload_exec_time(0.0, 1e6, 1e9, 1e10) == pytest.approx(0.1)
    assert offload_exec_time(1e6, 0.0, 1e9, 1e10) == math.inf
    # composed with the Shannon rate at SNR 3 on a 5e5 Hz channel
    from fedmec.wireless import shannon_rate
    rate = shannon_rate(5e5, 2.0, 1.5e-10, 1e-10)
    assert rate == pytest.approx(1e6)
    assert offload_exec_time(1e6, rate, 1e9, 1e10) == pytest.approx(1.1)
    with pytest.raises(ValueError):
        offload_exec_time(1e6, 1e6, 1e9, 0.0)


def test_utility_values():
    w = UtilityWeights()
    assert utility(EpochOutcome(), w) == 0.0
    assert utility(EpochOutcome(delay_s=1.0, energy_j=1.0), w) == pytest.approx(-1.5)
    assert utility(EpochOutcome(drops=1), w) == pytest.approx(-5.0)
    assert utility(EpochOutcome(failures=2), w) == pytest.approx(-10.0)
    with pytest.raises(ValueError):
        utility(EpochOutcome(delay_s=-1.0), w)


def test_action_flattening_roundtrip():
    for idx in range(55):
        act = unflatten_action(idx, 5)
        assert flatten_action(act, 5) == idx
    assert flatten_action(ControlAction(0, 0), 5) == 0
    assert unflatten_action(54, 5) == ControlAction(10, 4)


def test_step_idle_epoch():
    cfg = frozen_cfg(arrival=0.0)
    st = state_with_tasks(cfg, [])
    nxt, reward, info = offload_env_step(st, ControlAction(0, 0), cfg,
                                         np.random.default_rng(0))
    assert reward == 0.0
    assert nxt.queue_len == 0
    assert nxt.cum_energy_j == 0.0
    assert np.array_equal(nxt.channel_levels, st.channel_levels)  # identity chain
    assert st.queue_len == 0  # input state untouched


def test_step_forced_drop():
    cfg = make_cfg(ue=UEConfig(arrival_prob=1.0))
    st = state_with_tasks(cfg, [Task(1e6, 1e9) for _ in range(5)])
    nxt, reward, info = offload_env_step(st, ControlAction(0, 0), cfg,
                                         np.random.default_rng(0))
    assert info["outcome"].drops == 1
    assert nxt.queue_len == 5
    assert reward <= -cfg.weights.drop  # includes the drop penalty


def test_step_invalid_action():
    cfg = make_cfg()
    st = state_with_tasks(cfg, [])
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        offload_env_step(st, ControlAction(11, 0), cfg, rng)
    with pytest.raises(ValueError):
        offload_env_step(st, ControlAction(0, 5), cfg, rng)


def test_two_epoch_offload_trace():
    # rate is exactly 1e6 bps, so epoch 1 spends the whole second uploading
    # (delay 1.0, energy 2.0 -> u = -2.0) and epoch 2 finishes the task at
    # the edge after 0.1 s (u = -1.1)
    cfg = frozen_cfg()
    st = state_with_tasks(cfg, [Task(1e6, 1e9)])
    act = ControlAction(channel=1, energy_index=4)  # channel at level 1, e=2.0 J
    rng = np.random.default_rng(0)
    st1, r1, info1 = offload_env_step(st, act, cfg, rng)
    assert r1 == pytest.approx(-2.0, abs=1e-12)
    assert info1["completed"] == 0
    assert st1.tasks[0].remaining_bits == 0.0
    assert st1.tasks[0].remaining_cycles == 1e9
    assert st1.occupied_channel == 1
    st2, r2, info2 = offload_env_step(st1, act, cfg, rng)
    assert r2 == pytest.approx(-1.1, abs=1e-12)
    assert info2["completed"] == 1
    assert st2.queue_len == 0
    assert r1 + r2 == pytest.approx(-3.1, abs=1e-12)
    assert st2.cum_energy_j == pytest.approx(4.0)


def test_local_completion_within_epoch():
    cfg = frozen_cfg()
    st = state_with_tasks(cfg, [Task(1e6, 1e9)])
    # e = 1.5 J buys ~1.14 GHz: the 1e9-cycle task finishes inside the epoch
    nxt, reward, info = offload_env_step(st, ControlAction(0, 3), cfg,
                                         np.random.default_rng(0))
    assert info["completed"] == 1
    assert nxt.queue_len == 0
    t_exec = 1e9 / local_cpu_freq(1.5, 1e-27, 1.0)
    assert reward == pytest.approx(-(t_exec + 0.5 * 1.5), rel=1e-12)


def test_local_cube_root_boundary():
    # (1e27)**(1/3) lands just below 1e9 in doubles, so e = 1.0 leaves a
    # sliver of the 1e9-cycle task unfinished at the epoch boundary
    cfg = frozen_cfg()
    st = state_with_tasks(cfg, [Task(1e6, 1e9)])
    nxt, _, info = offload_env_step(st, ControlAction(0, 2), cfg,
                                    np.random.default_rng(0))
    assert info["completed"] == 0
    assert 0.0 < nxt.tasks[0].remaining_cycles < 1.0


def test_zero_energy_makes_no_progress():
    cfg = frozen_cfg()
    st = state_with_tasks(cfg, [Task(1e6, 1e9)])
    nxt, reward, info = offload_env_step(st, ControlAction(0, 0), cfg,
                                         np.random.default_rng(0))
    assert info["completed"] == 0
    assert nxt.tasks[0].remaining_cycles == 1e9
    assert reward == pytest.approx(-1.0)  # the task just waits out the epoch
    nxt2, reward2, info2 = offload_env_step(st, ControlAction(3, 0), cfg,
                                            np.random.default_rng(0))
    assert info2["completed"] == 0
    assert nxt2.tasks[0].remaining_bits == 1e6


def test_failure_after_deadline():
    cfg = frozen_cfg()
    st = state_with_tasks(cfg, [Task(1e6, 1e9, age=9)])
    nxt, reward, info = offload_env_step(st, ControlAction(0, 0), cfg,
                                         np.random.default_rng(0))
    assert info["outcome"].failures == 1
    assert nxt.queue_len == 0
    assert reward == pytest.approx(-(1.0 + 5.0))


def test_cum_energy_increases_by_chosen_level():
    cfg = make_cfg()
    st = state_with_tasks(cfg, [])
    rng = np.random.default_rng(5)
    total = 0.0
    for _ in range(200):
        e = int(rng.integers(0, 5))
        c = int(rng.integers(0, 11))
        st, _, _ = offload_env_step(st, ControlAction(c, e), cfg, rng)
        total += cfg.ue.energy_levels[e]
        assert st.cum_energy_j == pytest.approx(total)


def test_queue_bound_and_drop_exactness():
    # with certain arrivals, a drop happens exactly when the queue is full
    cfg = make_cfg(ue=UEConfig(arrival_prob=1.0))
    st = state_with_tasks(cfg, [])
    rng = np.random.default_rng(6)
    act_rng = np.random.default_rng(7)
    for _ in range(300):
        was_full = st.queue_len >= cfg.ue.queue_capacity
        a = ControlAction(int(act_rng.integers(0, 11)), int(act_rng.integers(0, 5)))
        nxt, _, info = offload_env_step(st, a, cfg, rng)
        assert info["outcome"].drops == (1 if was_full else 0)
        assert nxt.queue_len <= cfg.ue.queue_capacity
        st = nxt


def test_zero_arrivals_zero_energy_zero_reward():
    cfg = make_cfg(ue=UEConfig(arrival_prob=0.0))
    st = state_with_tasks(cfg, [])
    rng = np.random.default_rng(1)
    for _ in range(100):
        st, reward, _ = offload_env_step(st, ControlAction(0, 0), cfg, rng)
        assert reward == 0.0


def test_work_conservation():
    # no deadline aborts: every advanced cycle is either in a completed task
    # or still attached to a queued one
    cfg = make_cfg(ue=UEConfig(arrival_prob=0.4, max_sojourn_epochs=10_000))
    st = state_with_tasks(cfg, [])
    rng = np.random.default_rng(8)
    act_rng = np.random.default_rng(9)
    advanced = 0.0
    completed = 0
    for _ in range(2000):
        a = ControlAction(int(act_rng.integers(0, 11)), int(act_rng.integers(0, 5)))
        st, _, info = offload_env_step(st, a, cfg, rng)
        advanced += info["cycles_local"] + info["cycles_edge"]
        completed += info["completed"]
    residual = sum(cfg.task.cycles - t.remaining_cycles for t in st.tasks)
    assert advanced == pytest.approx(completed * cfg.task.cycles + residual,
                                     rel=1e-12)
    for t in st.tasks:
        assert t.remaining_cycles > 0.0


def test_step_determinism():
    cfg = make_cfg()

    def run():
        st = state_with_tasks(cfg, [])
        rng = np.random.default_rng(77)
        act = np.random.default_rng(78)
        trace = []
        for _ in range(300):
            a = ControlAction(int(act.integers(0, 11)), int(act.integers(0, 5)))
            st, r, _ = offload_env_step(st, a, cfg, rng)
            trace.append((st.queue_len, st.cum_energy_j, r,
                          tuple(st.channel_levels)))
        return trace

    assert run() == run()


def test_baseline_mobile_and_edge():
    cfg = make_cfg()
    levels = np.array([0, 5, 2, 1, 1, 4, 3, 0, 2, 1])
    st = state_with_tasks(cfg, [Task(1e6, 1e9)], levels)
    assert baseline_offload_action("mobile", st, cfg) == ControlAction(0, 4)
    assert baseline_offload_action("edge", st, cfg) == ControlAction(2, 4)
    with pytest.raises(ValueError):
        baseline_offload_action("random", st, cfg)


def test_greedy_empty_queue_spends_nothing():
    cfg = make_cfg()
    st = state_with_tasks(cfg, [])
    assert baseline_offload_action("greedy", st, cfg) == ControlAction(0, 0)


def brute_force_greedy(state, cfg):
    """Independent re-derivation of the one-epoch argmax from the model
    formulas; shares no code with the production evaluator."""
    ue, w = cfg.ue, cfg.weights
    tau = ue.epoch_seconds
    W = cfg.wireless.total_bandwidth_hz / cfg.wireless.num_channels
    best, best_u = None, None
    for idx in range(cfg.num_actions):
        c, e_idx = divmod(idx, len(ue.energy_levels))
        e = ue.energy_levels[e_idx]
        finish = None
        if state.tasks:
            bits = state.tasks[0].remaining_bits
            cyc = state.tasks[0].remaining_cycles
            if c == 0:
                f_l = (e / (ue.switched_capacitance * tau)) ** (1 / 3)
                if f_l > 0 and cyc <= f_l * tau:
                    finish = cyc / f_l
            else:
                g = cfg.channel.gains[int(state.channel_levels[c - 1])]
                rate = W * np.log2(1.0 + (e / tau) * g / cfg.wireless.noise_power_w)
                t = (bits / rate) if (bits > 0 and rate > 0) else \
                    (0.0 if bits == 0 else math.inf)
                if t < tau and cyc <= cfg.edge.edge_cpu_hz * (tau - t):
                    finish = t + cyc / cfg.edge.edge_cpu_hz
        q = len(state.tasks)
        fails = sum(1 for i, t_ in enumerate(state.tasks)
                    if t_.age + 1 >= ue.max_sojourn_epochs
                    and not (i == 0 and finish is not None))
        if finish is None:
            delay = tau * q
        else:
            delay = tau * (q - 1) + finish
        u = -(w.delay * delay + w.energy * e + w.fail * fails)
        if best_u is None or u > best_u:
            best, best_u = ControlAction(c, e_idx), u
    return best


def random_state(cfg, rng):
    q = int(rng.integers(0, cfg.ue.queue_capacity + 1))
    tasks = []
    for i in range(q):
        bits = float(rng.uniform(0, cfg.task.input_bits)) if (i == 0 and rng.random() < 0.4) \
            else cfg.task.input_bits
        if i == 0 and rng.random() < 0.3:
            bits = 0.0
        cyc = float(rng.uniform(1e5, cfg.task.cycles)) if i == 0 else cfg.task.cycles
        tasks.append(Task(bits, cyc, age=int(rng.integers(0, 11))))
    levels = rng.integers(0, cfg.channel.num_levels,
                          size=cfg.wireless.num_channels)
    st = NetworkState.initial(cfg.wireless.num_channels, levels)
    st.tasks = tasks
    st.cum_energy_j = float(rng.uniform(0, 100))
    return st


def test_greedy_matches_bruteforce_oracle():
    cfg = make_cfg(channel=ChannelModel(gains=2.0 ** np.arange(6) * 1e-10,
                                        transition=birth_death_matrix()))
    rng = np.random.default_rng(123)
    for _ in range(1000):
        st = random_state(cfg, rng)
        got = baseline_offload_action("greedy", st, cfg)
        want = brute_force_greedy(st, cfg)
        assert got == want, (st.tasks, st.channel_levels, got, want)


def test_greedy_matches_reference_enumeration():
    # second route: argmax over the copy-based epoch evaluator
    cfg = make_cfg(channel=ChannelModel(gains=2.0 ** np.arange(6) * 1e-10,
                                        transition=birth_death_matrix()))
    rng = np.random.default_rng(321)
    for _ in range(300):
        st = random_state(cfg, rng)
        best, best_u = None, -math.inf
        for idx in range(cfg.num_actions):
            act = unflatten_action(idx, len(cfg.ue.energy_levels))
            u = evaluate_epoch_utility(st, act, cfg)
            if u > best_u:
                best, best_u = act, u
        assert baseline_offload_action("greedy", st, cfg) == best


def test_config_validation():
    with pytest.raises(ValueError):
        UEConfig(arrival_prob=1.2)
    with pytest.raises(ValueError):
        UEConfig(energy_levels=(0.5, 1.0))  # zero level missing
    with pytest.raises(ValueError):
        UEConfig(energy_levels=(0.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        TaskSpec(input_bits=0.0)
    with pytest.raises(ValueError):
        # edge CPU must dominate the fastest local frequency
        make_cfg(edge=EdgeConfig(edge_cpu_hz=1e9))
