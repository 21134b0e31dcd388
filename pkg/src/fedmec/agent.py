"""Self-contained Double-DQN learner.

One tanh hidden layer, hand-rolled backprop and Adam, a FIFO ring replay
buffer, epsilon-greedy selection with action masks, and periodic target
network synchronization. Parameters serialize to a flat float64 vector
(W1 row-major, b1, W2 row-major, b2) for federated exchange and
checkpoints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SKIPPED = None  # train_step sentinel while the buffer is warming up


@dataclass
class MLPParams:
    """Weights of the two-layer net q(x) = W2 tanh(W1 x + b1) + b2."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    @property
    def input_dim(self):
        return self.w1.shape[1]

    @property
    def hidden_dim(self):
        return self.w1.shape[0]

    @property
    def output_dim(self):
        return self.w2.shape[0]

    def arrays(self):
        return [self.w1, self.b1, self.w2, self.b2]

    def copy(self) -> "MLPParams":
        return MLPParams(*(a.copy() for a in self.arrays()))

    def to_flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def load_flat(self, flat: np.ndarray):
        flat = np.asarray(flat, dtype=float)
        if flat.size != sum(a.size for a in self.arrays()):
            raise ValueError(f"parameter vector has {flat.size} entries, "
                             f"expected {sum(a.size for a in self.arrays())}")
        pos = 0
        for a in self.arrays():
            a[...] = flat[pos:pos + a.size].reshape(a.shape)
            pos += a.size

    @classmethod
    def init(cls, input_dim: int, hidden_dim: int, output_dim: int,
             rng: np.random.Generator) -> "MLPParams":
        """Scaled-uniform init, +-1/sqrt(fan_in) per layer."""
        r1 = 1.0 / np.sqrt(input_dim)
        r2 = 1.0 / np.sqrt(hidden_dim)
        return cls(
            w1=rng.uniform(-r1, r1, size=(hidden_dim, input_dim)),
            b1=rng.uniform(-r1, r1, size=hidden_dim),
            w2=rng.uniform(-r2, r2, size=(output_dim, hidden_dim)),
            b2=rng.uniform(-r2, r2, size=output_dim),
        )


def mlp_forward(params: MLPParams, x: np.ndarray) -> np.ndarray:
    """Q-values for a single state vector or a (batch, d_in) matrix."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if x.shape[-1] != params.input_dim:
        raise ValueError(f"input has dim {x.shape[-1]}, expected {params.input_dim}")
    h = np.tanh(np.atleast_2d(x) @ params.w1.T + params.b1)
    q = h @ params.w2.T + params.b2
    return q[0] if single else q


def mlp_backward(params: MLPParams, x: np.ndarray,
                 output_gradient: np.ndarray) -> MLPParams:
    """Exact gradients of the forward map, summed over the batch.

    `output_gradient` is dLoss/dq with the same leading shape as `x`.
    Returns gradients in an MLPParams-shaped container.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    g = np.atleast_2d(np.asarray(output_gradient, dtype=float))
    if x.shape[-1] != params.input_dim or g.shape[-1] != params.output_dim \
            or x.shape[0] != g.shape[0]:
        raise ValueError("gradient/input shapes inconsistent with parameters")
    h = np.tanh(x @ params.w1.T + params.b1)
    gw2 = g.T @ h
    gb2 = g.sum(axis=0)
    gh = g @ params.w2
    gz = gh * (1.0 - h * h)  # tanh' = 1 - tanh^2
    gw1 = gz.T @ x
    gb1 = gz.sum(axis=0)
    return MLPParams(gw1, gb1, gw2, gb2)


@dataclass
class AdamState:
    """Adam moments and step counter for one parameter set."""

    m: list
    v: list
    t: int = 0
    learning_rate: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    scratch: list = None  # lazily allocated update workspace

    @classmethod
    def for_params(cls, params: MLPParams, learning_rate: float = 0.005) -> "AdamState":
        return cls(m=[np.zeros_like(a) for a in params.arrays()],
                   v=[np.zeros_like(a) for a in params.arrays()],
                   learning_rate=learning_rate)


def adam_step(params: MLPParams, grads: MLPParams, opt: AdamState):
    """Standard Adam update with bias correction; mutates params and opt."""
    opt.t += 1
    c1 = 1.0 - opt.beta1 ** opt.t
    c2 = 1.0 - opt.beta2 ** opt.t
    if opt.scratch is None:
        opt.scratch = [np.empty_like(a) for a in params.arrays()]
    for a, g, m, v, s in zip(params.arrays(), grads.arrays(), opt.m, opt.v,
                             opt.scratch):
        if not np.isfinite(np.sum(g)):
            raise RuntimeError("non-finite gradient in adam_step")
        m *= opt.beta1
        m += (1.0 - opt.beta1) * g
        np.multiply(g, g, out=s)
        s *= 1.0 - opt.beta2
        v *= opt.beta2
        v += s
        np.divide(v, c2, out=s)
        np.sqrt(s, out=s)
        s += opt.eps
        np.divide(m, s, out=s)
        s *= opt.learning_rate / c1
        a -= s
    return params, opt


def select_action(q: np.ndarray, epsilon: float, valid_mask, rng) -> int:
    """Epsilon-greedy over the valid actions, greedy ties to the smallest index.

    valid_mask None means every action is valid. With epsilon == 0 no
    randomness is consumed, so frozen-policy evaluation leaves every
    stream untouched.
    """
    q = np.asarray(q, dtype=float)
    if valid_mask is None:
        if epsilon > 0.0 and rng.random() < epsilon:
            return int(rng.integers(q.shape[0]))
        return int(np.argmax(q))
    valid_mask = np.asarray(valid_mask, dtype=bool)
    valid = np.flatnonzero(valid_mask)
    if valid.size == 0:
        raise ValueError("at least one action must be valid")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(valid[rng.integers(valid.size)])
    masked = np.where(valid_mask, q, -np.inf)
    return int(np.argmax(masked))


def ddqn_target(reward: float, terminal: bool, gamma: float,
                q_main_next: np.ndarray, q_target_next: np.ndarray,
                next_valid_mask=None) -> float:
    """Double-DQN target: action chosen by MainNet, valued by TargetNet."""
    if terminal:
        return float(reward)
    q_main_next = np.asarray(q_main_next, dtype=float)
    if next_valid_mask is None:
        next_valid_mask = np.ones(q_main_next.shape[0], dtype=bool)
    masked = np.where(np.asarray(next_valid_mask, dtype=bool), q_main_next, -np.inf)
    a_star = int(np.argmax(masked))
    return float(reward + gamma * np.asarray(q_target_next, dtype=float)[a_star])


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions."""

    def __init__(self, capacity: int, state_dim: int, num_actions: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.terminals = np.zeros(capacity, dtype=bool)
        self.next_masks = np.ones((capacity, num_actions), dtype=bool)
        self.size = 0
        self._cursor = 0

    def add(self, state, action, reward, next_state, terminal, next_mask=None):
        i = self._cursor
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.terminals[i] = terminal
        self.next_masks[i] = True if next_mask is None else next_mask
        self._cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform mini-batch with replacement."""
        return rng.integers(0, self.size, size=batch_size)


@dataclass(frozen=True)
class AgentConfig:
    hidden_dim: int = 200
    learning_rate: float = 0.005
    discount: float = 0.9
    epsilon: float = 0.001
    batch_size: int = 200
    target_sync_period: int = 250
    replay_capacity: int = 5000
    train_period: int = 10      # environment steps between train calls
    grad_clip: float = 0.0      # 0 disables global-norm clipping
    epsilon_anneal_steps: int = 0  # 0 keeps epsilon constant
    epsilon_start: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.discount < 1.0:
            raise ValueError(f"discount must be in [0,1), got {self.discount}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0,1], got {self.epsilon}")
        if self.batch_size > self.replay_capacity:
            raise ValueError("batch_size cannot exceed replay_capacity")
        if self.hidden_dim < 1 or self.batch_size < 1 or self.target_sync_period < 1:
            raise ValueError("hidden_dim, batch_size, target_sync_period must be >= 1")
        if self.train_period < 1:
            raise ValueError("train_period must be >= 1")


class _TrainScratch:
    """Preallocated batch workspaces; fresh >128 KiB temporaries per train
    step hit the allocator's mmap path and dominate the runtime."""

    def __init__(self, batch: int, hidden: int, actions: int):
        self.h = np.empty((batch, hidden))       # kept for the backward pass
        self.z = np.empty((batch, hidden))
        self.q = np.empty((batch, actions))
        self.q_main_next = np.empty((batch, actions))
        self.q_target_next = np.empty((batch, actions))
        self.grad_out = np.empty((batch, actions))
        self.gh = np.empty((batch, hidden))
        self.tmp = np.empty((batch, hidden))


def _forward_into(params: MLPParams, w1t, w2t, x, z_buf, h_buf, q_buf):
    """mlp_forward writing through preallocated buffers. w1t/w2t are
    C-contiguous copies of the transposed weights; matmul with out= and a
    strided operand falls off the fast BLAS path."""
    np.matmul(x, w1t, out=z_buf)
    np.add(z_buf, params.b1, out=z_buf)
    np.tanh(z_buf, out=h_buf)
    np.matmul(h_buf, w2t, out=q_buf)
    np.add(q_buf, params.b2, out=q_buf)
    return q_buf


class DqnAgent:
    """Double-DQN agent owning its nets, optimizer, replay memory and stream."""

    def __init__(self, input_dim: int, num_actions: int, config: AgentConfig,
                 rng: np.random.Generator):
        self.config = config
        self.rng = rng
        self.input_dim = input_dim
        self.num_actions = num_actions
        self.main = MLPParams.init(input_dim, config.hidden_dim, num_actions, rng)
        self.target = self.main.copy()
        self.opt = AdamState.for_params(self.main, config.learning_rate)
        self.buffer = ReplayBuffer(config.replay_capacity, input_dim, num_actions)
        self.train_count = 0
        self._since_sync = 0
        self._act_count = 0
        self._scratch = _TrainScratch(config.batch_size, config.hidden_dim,
                                      num_actions)

    @property
    def epsilon(self) -> float:
        cfg = self.config
        if cfg.epsilon_anneal_steps <= 0 or self._act_count >= cfg.epsilon_anneal_steps:
            return cfg.epsilon
        frac = self._act_count / cfg.epsilon_anneal_steps
        return cfg.epsilon_start + frac * (cfg.epsilon - cfg.epsilon_start)

    def q_values(self, obs) -> np.ndarray:
        # single-sample forward without the batch plumbing of mlp_forward
        p = self.main
        return p.w2 @ np.tanh(p.w1 @ obs + p.b1) + p.b2

    def act(self, obs, valid_mask=None) -> int:
        a = select_action(self.q_values(obs), self.epsilon, valid_mask, self.rng)
        self._act_count += 1
        return a

    def act_greedy(self, obs, valid_mask=None) -> int:
        return select_action(self.q_values(obs), 0.0, valid_mask, None)

    def remember(self, state, action, reward, next_state, terminal,
                 next_mask=None):
        self.buffer.add(state, action, reward, next_state, terminal, next_mask)

    def train_step(self):
        """One mini-batch update; returns the loss, or SKIPPED while the
        buffer holds fewer transitions than a batch."""
        cfg = self.config
        buf = self.buffer
        if buf.size < cfg.batch_size:
            return SKIPPED
        sc = self._scratch
        idx = buf.sample_indices(cfg.batch_size, self.rng)
        states = buf.states[idx]
        actions = buf.actions[idx]
        rewards = buf.rewards[idx]
        next_states = buf.next_states[idx]
        terminals = buf.terminals[idx]
        next_masks = buf.next_masks[idx]

        w1t_m = np.ascontiguousarray(self.main.w1.T)
        w2t_m = np.ascontiguousarray(self.main.w2.T)
        w1t_t = np.ascontiguousarray(self.target.w1.T)
        w2t_t = np.ascontiguousarray(self.target.w2.T)
        q_main_next = _forward_into(self.main, w1t_m, w2t_m, next_states,
                                    sc.z, sc.z, sc.q_main_next)
        q_target_next = _forward_into(self.target, w1t_t, w2t_t, next_states,
                                      sc.z, sc.z, sc.q_target_next)
        masked = np.where(next_masks, q_main_next, -np.inf)
        a_star = np.argmax(masked, axis=1)
        rows = np.arange(cfg.batch_size)
        targets = rewards + cfg.discount * q_target_next[rows, a_star] * ~terminals

        q = _forward_into(self.main, w1t_m, w2t_m, states, sc.z, sc.h, sc.q)
        pred = q[rows, actions]
        err = pred - targets
        loss = float(np.mean(err * err))
        if not np.isfinite(loss):
            raise RuntimeError("non-finite training loss")
        # mean-squared-error gradient routed only through the taken actions
        sc.grad_out.fill(0.0)
        sc.grad_out[rows, actions] = 2.0 * err / cfg.batch_size
        gw2 = sc.grad_out.T @ sc.h
        gb2 = sc.grad_out.sum(axis=0)
        np.matmul(sc.grad_out, self.main.w2, out=sc.gh)
        np.multiply(sc.h, sc.h, out=sc.tmp)
        np.subtract(1.0, sc.tmp, out=sc.tmp)
        np.multiply(sc.gh, sc.tmp, out=sc.gh)
        gw1 = sc.gh.T @ states
        gb1 = sc.gh.sum(axis=0)
        grads = MLPParams(gw1, gb1, gw2, gb2)
        if cfg.grad_clip > 0.0:
            norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.arrays()))
            if norm > cfg.grad_clip:
                scale = cfg.grad_clip / norm
                for g in grads.arrays():
                    g *= scale
        adam_step(self.main, grads, self.opt)
        self.train_count += 1
        self._since_sync += 1
        if self._since_sync >= cfg.target_sync_period:
            self.target = self.main.copy()
            self._since_sync = 0
        return loss

    def get_params_flat(self) -> np.ndarray:
        return self.main.to_flat()

    def set_params_flat(self, flat, reset_target: bool = True):
        """Install parameters (e.g. a federated merge); the target net and its
        sync counter reset so stale targets never follow a merge."""
        self.main.load_flat(flat)
        if reset_target:
            self.target = self.main.copy()
            self._since_sync = 0
