"""Finite-state Markov channel model and Shannon-Hartley rates.

Per-channel gain is quantized into a small number of levels; the level
evolves once per epoch according to a row-stochastic transition matrix.
All functions are pure and take an explicit random generator, so any
number of simulations can run concurrently on independent streams.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_NUM_LEVELS = 6
DEFAULT_STAY_PROB = 0.6
DEFAULT_MOVE_PROB = 0.2
# 3 dB spacing between adjacent gain levels
DEFAULT_GAINS = tuple(2.0 ** k * 1e-6 for k in range(6))


def birth_death_matrix(num_levels: int = DEFAULT_NUM_LEVELS,
                       stay: float = DEFAULT_STAY_PROB,
                       move: float = DEFAULT_MOVE_PROB) -> np.ndarray:
    """Birth-death transition matrix; blocked boundary moves fold into stay."""
    if num_levels < 2:
        raise ValueError(f"num_levels must be >= 2, got {num_levels}")
    if stay < 0 or move < 0 or abs(stay + 2 * move - 1.0) > 1e-12:
        raise ValueError("stay + 2*move must equal 1")
    p = np.zeros((num_levels, num_levels))
    for i in range(num_levels):
        p[i, i] = stay
        if i > 0:
            p[i, i - 1] = move
        else:
            p[i, i] += move
        if i < num_levels - 1:
            p[i, i + 1] = move
        else:
            p[i, i] += move
    return p


@dataclass
class ChannelModel:
    """Quantized channel-gain levels with per-epoch Markov transitions."""

    gains: np.ndarray
    transition: np.ndarray
    _cdf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=float)
        self.transition = np.asarray(self.transition, dtype=float)
        n = self.gains.shape[0]
        if n < 2:
            raise ValueError(f"need at least 2 gain levels, got {n}")
        if np.any(self.gains <= 0) or np.any(np.diff(self.gains) <= 0):
            raise ValueError("gains must be strictly increasing and positive")
        if self.transition.shape != (n, n):
            raise ValueError(f"transition must be {n}x{n}, got {self.transition.shape}")
        if np.any(self.transition < 0) or np.any(self.transition > 1):
            raise ValueError("transition entries must lie in [0, 1]")
        rows = self.transition.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > 1e-12):
            raise ValueError("transition rows must sum to 1 within 1e-12")
        self._cdf = np.cumsum(self.transition, axis=1)

    @property
    def num_levels(self) -> int:
        return self.gains.shape[0]

    @classmethod
    def default(cls) -> "ChannelModel":
        return cls(gains=np.array(DEFAULT_GAINS), transition=birth_death_matrix())


@dataclass(frozen=True)
class WirelessConfig:
    """System bandwidth split evenly over orthogonal channels."""

    total_bandwidth_hz: float = 5e6
    num_channels: int = 10
    noise_power_w: float = 1e-10

    def __post_init__(self):
        if self.total_bandwidth_hz <= 0 or self.noise_power_w <= 0:
            raise ValueError("bandwidth and noise power must be positive")
        if self.num_channels < 1:
            raise ValueError("need at least one channel")
        w = self.total_bandwidth_hz / self.num_channels
        if w * self.num_channels != self.total_bandwidth_hz:
            raise ValueError("total bandwidth must split exactly across channels")

    @property
    def per_channel_bandwidth_hz(self) -> float:
        return self.total_bandwidth_hz / self.num_channels


def channel_step(level: int, model: ChannelModel, rng: np.random.Generator) -> int:
    """Draw the next gain level from the transition row of `level` (one draw)."""
    if not 0 <= level < model.num_levels:
        raise ValueError(f"level {level} out of range [0, {model.num_levels})")
    u = rng.random()
    nxt = int(np.searchsorted(model._cdf[level], u, side="right"))
    return min(nxt, model.num_levels - 1)


def shannon_rate(bandwidth_hz: float, tx_power_w: float, gain_linear: float,
                 noise_power_w: float) -> float:
    """Achievable rate in bits/s: W * log2(1 + p*g/sigma^2)."""
    if bandwidth_hz <= 0 or noise_power_w <= 0:
        raise ValueError("bandwidth and noise power must be positive")
    if tx_power_w < 0 or gain_linear < 0:
        raise ValueError("power and gain must be nonnegative")
    return bandwidth_hz * np.log2(1.0 + tx_power_w * gain_linear / noise_power_w)


def stationary_distribution(model: ChannelModel, tol: float = 1e-12,
                            max_iter: int = 1_000_000) -> np.ndarray:
    """Stationary distribution pi with pi @ P = pi, via power iteration."""
    p = model.transition
    pi = np.full(model.num_levels, 1.0 / model.num_levels)
    for _ in range(max_iter):
        nxt = pi @ p
        if np.abs(nxt - pi).max() <= tol:
            return nxt / nxt.sum()
        pi = nxt
    raise RuntimeError(f"power iteration did not converge within {max_iter} iterations")
