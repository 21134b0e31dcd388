"""Zipf request workload, bounded edge cache, and replacement policies.

The cache is a per-request MDP: on a miss the controller either bypasses
the requested content or admits it in place of a chosen slot. Classic
LRU / LFU / FIFO policies are provided as baselines, plus the best
static cache under the stationary popularity as an upper-bound oracle.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

BYPASS = 0


def zipf_pmf(num_contents: int, alpha: float) -> np.ndarray:
    """Zipf popularity over ranks 1..F: P(k) = k^-alpha / sum_j j^-alpha."""
    if num_contents < 1:
        raise ValueError(f"num_contents must be >= 1, got {num_contents}")
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    ranks = np.arange(1, num_contents + 1, dtype=float)
    weights = ranks ** -alpha
    return weights / weights.sum()


@dataclass
class ContentCatalog:
    """Content library with a fixed request popularity distribution."""

    num_contents: int = 50
    zipf_alpha: float = 1.58
    popularity: np.ndarray = None
    _perm: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.num_contents < 2:
            raise ValueError(f"need at least 2 contents, got {self.num_contents}")
        if self.popularity is None:
            self.popularity = zipf_pmf(self.num_contents, self.zipf_alpha)
        else:
            self.popularity = np.asarray(self.popularity, dtype=float)
            if self.popularity.shape != (self.num_contents,):
                raise ValueError("popularity length must equal num_contents")
            if abs(self.popularity.sum() - 1.0) > 1e-12:
                raise ValueError("popularity must sum to 1 within 1e-12")
            if np.any(np.diff(self.popularity) > 0):
                raise ValueError("popularity must be nonincreasing in rank")
        self._cdf = np.cumsum(self.popularity)

    def reshuffle(self, rng: np.random.Generator):
        """Permute which content id carries which popularity rank (optional
        nonstationary mode). Sampling still uses rank-ordered probabilities;
        the permutation maps sampled ranks to content ids."""
        self._perm = rng.permutation(self.num_contents)

    def sample(self, rng: np.random.Generator) -> int:
        """Inverse-CDF draw of a content id (one stream draw)."""
        u = rng.random()
        k = int(np.searchsorted(self._cdf, u, side="right"))
        k = min(k, self.num_contents - 1)
        if self._perm is not None:
            k = int(self._perm[k])
        return k


def sample_request(catalog: ContentCatalog, rng: np.random.Generator) -> int:
    return catalog.sample(rng)


def optimal_static_hitrate(catalog: ContentCatalog, capacity: int) -> float:
    """Hit rate of the best fixed cache: mass of the `capacity` most popular contents."""
    if capacity > catalog.num_contents:
        raise ValueError(f"capacity {capacity} exceeds catalog size {catalog.num_contents}")
    return float(np.sort(catalog.popularity)[::-1][:capacity].sum())


@dataclass
class CacheState:
    """Cache slots plus the bookkeeping every policy draws on.

    `window` keeps the last `window_size` request ids for frequency
    features; `lifetime_counts`, `last_used` and `inserted_seq` feed the
    LFU / LRU / FIFO baselines. All counters update on every request so
    one state type serves both the learned and the classic policies.
    """

    capacity: int = 5
    window_size: int = 1000
    slots: list = field(default_factory=list)
    hit_count: int = 0
    miss_count: int = 0
    request_count: int = 0

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")
        if self.window_size < 1:
            raise ValueError("window_size must be >= 1")
        self.window = deque()
        self.window_counts: dict = {}
        self.lifetime_counts: dict = {}
        self.last_used: dict = {}
        self.inserted_seq: dict = {}

    def record_request(self, content: int):
        """Advance the sliding window and per-content counters for one request."""
        self.window.append(content)
        self.window_counts[content] = self.window_counts.get(content, 0) + 1
        if len(self.window) > self.window_size:
            old = self.window.popleft()
            c = self.window_counts[old] - 1
            if c:
                self.window_counts[old] = c
            else:
                del self.window_counts[old]
        self.lifetime_counts[content] = self.lifetime_counts.get(content, 0) + 1
        self.last_used[content] = self.request_count

    def window_freq(self, content: int) -> float:
        return self.window_counts.get(content, 0) / self.window_size


def observe(state: CacheState, request: int) -> np.ndarray:
    """Feature vector: window frequencies of the cached contents (zero-padded
    to capacity) followed by the frequency of the requested content."""
    obs = np.zeros(state.capacity + 1)
    for i, c in enumerate(state.slots):
        obs[i] = state.window_freq(c)
    obs[state.capacity] = state.window_freq(request)
    return obs


def cache_env_step(state: CacheState, request: int, action: int):
    """Apply one request to the cache under the controller's action.

    Returns (observation, reward, hit). On a hit the action is ignored
    (reward 1, slots unchanged); on a miss action 0 bypasses and action i
    replaces slot i with the request (appends while the cache has room).
    The observation reflects the post-update state.
    """
    if not 0 <= action <= state.capacity:
        raise ValueError(f"action {action} out of range [0, {state.capacity}]")
    state.record_request(request)
    state.request_count += 1
    hit = request in state.slots
    if hit:
        state.hit_count += 1
        reward = 1.0
    else:
        state.miss_count += 1
        reward = 0.0
        if action != BYPASS:
            if len(state.slots) < state.capacity:
                state.slots.append(request)
            else:
                state.slots[action - 1] = request
            state.inserted_seq[request] = state.request_count
    return observe(state, request), reward, hit


def baseline_cache_step(policy: str, state: CacheState, request: int) -> bool:
    """One request under a textbook policy. Returns whether it hit.

    LRU and FIFO admit on every miss, evicting the least-recently-used /
    oldest-inserted slot. LFU evicts whichever of the cached contents and
    the incoming one has the lowest lifetime request count (ties to the
    oldest insertion, the incoming content counting as newest), so a cold
    content cannot displace an established popular one; this is the variant
    that converges to caching the top-C contents under a fixed popularity.
    """
    if policy not in ("lru", "lfu", "fifo"):
        raise ValueError(f"unknown policy {policy!r}")
    state.record_request(request)
    state.request_count += 1
    hit = request in state.slots
    if hit:
        state.hit_count += 1
        return True
    state.miss_count += 1
    if len(state.slots) < state.capacity:
        state.slots.append(request)
    elif policy == "lru":
        victim = min(range(len(state.slots)),
                     key=lambda i: state.last_used[state.slots[i]])
        state.slots[victim] = request
    elif policy == "fifo":
        victim = min(range(len(state.slots)),
                     key=lambda i: state.inserted_seq[state.slots[i]])
        state.slots[victim] = request
    else:  # lfu
        victim = min(range(len(state.slots)),
                     key=lambda i: (state.lifetime_counts[state.slots[i]],
                                    state.inserted_seq[state.slots[i]]))
        new_count = state.lifetime_counts[request]
        if new_count >= state.lifetime_counts[state.slots[victim]]:
            state.slots[victim] = request
        else:
            return False  # the incoming content is itself the LFU victim
    state.inserted_seq[request] = state.request_count
    return False
