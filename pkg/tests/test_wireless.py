import numpy as np
import pytest

from fedmec.wireless import (ChannelModel, WirelessConfig, birth_death_matrix,
                             channel_step, shannon_rate, stationary_distribution)


def cyclic_model(n=6):
    p = np.zeros((n, n))
    for i in range(n):
        p[i, (i + 1) % n] = 1.0
    gains = 2.0 ** np.arange(n) * 1e-6
    return ChannelModel(gains=gains, transition=p)


def test_default_model_shape():
    m = ChannelModel.default()
    assert m.num_levels == 6
    assert np.allclose(m.transition.sum(axis=1), 1.0)
    assert np.all(np.diff(m.gains) > 0)
    # boundary rows absorb the blocked move into stay
    assert m.transition[0, 0] == pytest.approx(0.8)
    assert m.transition[5, 5] == pytest.approx(0.8)
    assert m.transition[2, 2] == pytest.approx(0.6)


def test_model_validation():
    good = birth_death_matrix()
    with pytest.raises(ValueError):
        ChannelModel(gains=np.array([1e-6, 1e-6, 2e-6, 3e-6, 4e-6, 5e-6]),
                     transition=good)  # not strictly increasing
    bad = good.copy()
    bad[0, 0] += 1e-6
    with pytest.raises(ValueError):
        ChannelModel(gains=2.0 ** np.arange(6) * 1e-6, transition=bad)
    with pytest.raises(ValueError):
        ChannelModel(gains=np.array([1e-6]), transition=np.array([[1.0]]))


def test_wireless_config_defaults():
    cfg = WirelessConfig()
    assert cfg.per_channel_bandwidth_hz == 5e5
    assert cfg.per_channel_bandwidth_hz * cfg.num_channels == cfg.total_bandwidth_hz
    with pytest.raises(ValueError):
        WirelessConfig(total_bandwidth_hz=-1.0)
    with pytest.raises(ValueError):
        WirelessConfig(num_channels=0)


def test_channel_step_identity_absorbing():
    m = ChannelModel(gains=2.0 ** np.arange(6) * 1e-6, transition=np.eye(6))
    rng = np.random.default_rng(0)
    assert channel_step(3, m, rng) == 3


def test_channel_step_forced_cycle():
    m = cyclic_model()
    rng = np.random.default_rng(0)
    assert channel_step(5, m, rng) == 0
    assert channel_step(2, m, rng) == 3


def test_channel_step_rejects_bad_level():
    m = ChannelModel.default()
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        channel_step(6, m, rng)
    with pytest.raises(ValueError):
        channel_step(-1, m, rng)


def test_channel_step_advances_stream_once():
    m = ChannelModel.default()
    r1 = np.random.default_rng(5)
    r2 = np.random.default_rng(5)
    channel_step(2, m, r1)
    r2.random()
    assert r1.random() == r2.random()


def test_shannon_rate_values():
    assert shannon_rate(1e6, 1.0, 1.0, 1.0) == pytest.approx(1e6)  # log2(2) = 1
    assert shannon_rate(777.0, 0.0, 5.0, 1e-10) == 0.0
    # W = 5 MHz / 10 channels, SNR = 3 -> log2(4) = 2
    assert shannon_rate(5e5, 3e-10, 1.0, 1e-10) == pytest.approx(1e6)


def test_shannon_rate_contract():
    with pytest.raises(ValueError):
        shannon_rate(0.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        shannon_rate(1e6, -1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        shannon_rate(1e6, 1.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        shannon_rate(1e6, 1.0, 1.0, 0.0)


def test_shannon_rate_monotone():
    rng = np.random.default_rng(11)
    for _ in range(200):
        w = rng.uniform(1e5, 1e7)
        g = rng.uniform(1e-8, 1e-4)
        n = rng.uniform(1e-12, 1e-8)
        p1, p2 = sorted(rng.uniform(0.0, 5.0, size=2))
        assert shannon_rate(w, p1, g, n) <= shannon_rate(w, p2, g, n)
        g1, g2 = sorted(rng.uniform(1e-8, 1e-4, size=2))
        assert shannon_rate(w, p1, g1, n) <= shannon_rate(w, p1, g2, n)
        assert shannon_rate(w, 0.0, g, n) == 0.0


def test_stationary_symmetric_two_state():
    m = ChannelModel(gains=np.array([1e-6, 2e-6]),
                     transition=np.array([[0.5, 0.5], [0.5, 0.5]]))
    assert np.allclose(stationary_distribution(m), [0.5, 0.5], atol=1e-12)


def test_stationary_cycle_uniform():
    pi = stationary_distribution(cyclic_model())
    # power iteration from the uniform start is already the fixed point
    assert np.allclose(pi, 1.0 / 6.0, atol=1e-12)


def test_stationary_default_birth_death():
    m = ChannelModel.default()
    pi = stationary_distribution(m)
    # oracle 1: solve pi (P - I) = 0 with the normalization row appended
    a = np.vstack([m.transition.T - np.eye(6), np.ones(6)])
    b = np.zeros(7)
    b[-1] = 1.0
    direct, *_ = np.linalg.lstsq(a, b, rcond=None)
    assert np.abs(pi - direct).max() < 1e-9
    # oracle 2: detailed balance of the symmetric birth-death chain -> uniform
    assert np.allclose(pi, 1.0 / 6.0, atol=1e-10)
    assert np.abs(pi @ m.transition - pi).max() <= 1e-10
    assert pi.sum() == pytest.approx(1.0, abs=1e-10)


def test_stationary_non_convergence():
    # bipartite chain with a non-uniform stationary point: the power
    # iteration oscillates with period 2 and never settles
    p = np.array([[0.0, 0.5, 0.5],
                  [1.0, 0.0, 0.0],
                  [1.0, 0.0, 0.0]])
    m = ChannelModel(gains=np.array([1e-6, 2e-6, 4e-6]), transition=p)
    with pytest.raises(RuntimeError):
        stationary_distribution(m, max_iter=1000)


def test_empirical_chain_frequencies_match_stationary():
    m = ChannelModel.default()
    rng = np.random.default_rng(42)
    pi = stationary_distribution(m)
    counts = np.zeros(6)
    level = 0
    for _ in range(1_000_000):
        level = channel_step(level, m, rng)
        counts[level] += 1
    emp = counts / counts.sum()
    assert np.abs(emp - pi).sum() < 0.02


def test_row_draw_frequencies_match_row():
    # repeated single-row draws reproduce that row's distribution
    rng = np.random.default_rng(3)
    p = rng.dirichlet(np.ones(6), size=6)
    m = ChannelModel(gains=2.0 ** np.arange(6) * 1e-6, transition=p)
    draws = np.random.default_rng(4)
    counts = np.zeros(6)
    row = 2
    n = 200_000
    for _ in range(n):
        counts[channel_step(row, m, draws)] += 1
    assert np.abs(counts / n - p[row]).sum() < 0.02
