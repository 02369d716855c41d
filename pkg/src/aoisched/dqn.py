"""From-scratch deep Q-network: fixed-topology MLP, manual backpropagation,
Adam, replay memory, and periodic target-network cloning.

The network maps a normalized state vector to one Q-value per catalog
action; infeasible actions are masked to minus infinity both when acting
and when forming bootstrap targets.  Everything is float64 numpy so that
training is deterministic under a fixed seed and the analytic gradients can
be verified against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qlearning
from .mdp import NetworkEnv


@dataclass
class MlpParams:
    """Weight matrices (fan_in, fan_out) and bias vectors per layer."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def copy(self) -> "MlpParams":
        return MlpParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


def init_mlp(layer_sizes: list[int], rng: np.random.Generator) -> MlpParams:
    """Uniform scaled init, +-sqrt(6/(fan_in+fan_out)); zero biases."""
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights=weights, biases=biases)


def clone_target(params: MlpParams) -> MlpParams:
    """Deep copy; the clone stays frozen while the online net keeps training."""
    return params.copy()


def _forward_cached(params: MlpParams, x: np.ndarray):
    """Batched forward pass keeping post-activation layers for backprop."""
    h = x
    cache = [h]
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ w + b
        h = z if i == last else np.maximum(z, 0.0)
        cache.append(h)
    return h, cache


def forward(params: MlpParams, state: np.ndarray) -> np.ndarray:
    """Q-value vector for one state encoding."""
    state = np.asarray(state, dtype=float)
    if state.ndim != 1 or state.shape[0] != params.weights[0].shape[0]:
        raise ValueError(
            f"state dimension {state.shape} does not match input layer "
            f"({params.weights[0].shape[0]})"
        )
    out, _ = _forward_cached(params, state[None, :])
    return out[0]


def forward_batch(params: MlpParams, states: np.ndarray) -> np.ndarray:
    out, _ = _forward_cached(params, np.asarray(states, dtype=float))
    return out


def masked_argmax(q_values: np.ndarray, mask: np.ndarray) -> int:
    """Greedy feasible action; ties resolve to the lowest action index."""
    q = np.where(mask, q_values, -np.inf)
    return int(np.argmax(q))


@dataclass
class Transition:
    """One stored experience; the next-state feasibility mask is cached so
    bootstrap targets never have to re-derive it from the encoding."""

    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    next_mask: np.ndarray


@dataclass
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    next_masks: np.ndarray


class ReplayMemory:
    """Fixed-capacity ring of transitions, oldest overwritten first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._cursor = 0

    def push(self, transition: Transition):
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._cursor] = transition
        self._cursor = (self._cursor + 1) % self.capacity

    def __len__(self) -> int:
        return len(self._items)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Uniform draw without replacement within one batch."""
        if len(self._items) < batch_size:
            raise ValueError("replay memory holds fewer records than the batch")
        idx = rng.choice(len(self._items), size=batch_size, replace=False)
        picks = [self._items[i] for i in idx]
        return Batch(
            states=np.stack([p.state for p in picks]),
            actions=np.asarray([p.action for p in picks], dtype=np.int64),
            rewards=np.asarray([p.reward for p in picks], dtype=float),
            next_states=np.stack([p.next_state for p in picks]),
            next_masks=np.stack([p.next_mask for p in picks]),
        )


def sample_minibatch(memory: ReplayMemory, batch_size: int,
                     rng: np.random.Generator) -> Batch:
    return memory.sample(batch_size, rng)


def bellman_loss(params: MlpParams, target_params: MlpParams, batch: Batch,
                 gamma: float, double: bool = True,
                 reward_scale: float = 1.0):
    """Mean squared temporal-difference error and its gradient.

    Targets bootstrap through the frozen target network; with ``double`` the
    next action is chosen by the online network and evaluated by the target.
    Infeasible next actions are masked out before the max.  This is a
    continuing task, so every sample bootstraps.  Returns
    (loss, (weight_grads, bias_grads)).
    """
    b = len(batch.actions)
    if b == 0:
        raise ValueError("batch must not be empty")
    rewards = batch.rewards / reward_scale

    q_next_target = forward_batch(target_params, batch.next_states)
    q_next_target = np.where(batch.next_masks, q_next_target, -np.inf)
    if double:
        q_next_online = forward_batch(params, batch.next_states)
        q_next_online = np.where(batch.next_masks, q_next_online, -np.inf)
        picks = np.argmax(q_next_online, axis=1)
        bootstrap = q_next_target[np.arange(b), picks]
    else:
        bootstrap = np.max(q_next_target, axis=1)
    targets = rewards + gamma * bootstrap

    q_all, cache = _forward_cached(params, batch.states)
    chosen = q_all[np.arange(b), batch.actions]
    diff = chosen - targets
    loss = float(np.mean(diff**2))

    d_out = np.zeros_like(q_all)
    d_out[np.arange(b), batch.actions] = 2.0 * diff / b

    weight_grads = [None] * len(params.weights)
    bias_grads = [None] * len(params.biases)
    grad = d_out
    for layer in range(len(params.weights) - 1, -1, -1):
        h_prev = cache[layer]
        weight_grads[layer] = h_prev.T @ grad
        bias_grads[layer] = grad.sum(axis=0)
        if layer > 0:
            grad = (grad @ params.weights[layer].T) * (cache[layer] > 0)
    return loss, (weight_grads, bias_grads)


def clip_gradients(grads, max_norm: float) -> float:
    """Scale all gradients in place so the global norm is at most max_norm."""
    weight_grads, bias_grads = grads
    total = 0.0
    for g in [*weight_grads, *bias_grads]:
        total += float(np.sum(g * g))
    norm = np.sqrt(total)
    if norm > max_norm > 0:
        scale = max_norm / norm
        for g in [*weight_grads, *bias_grads]:
            g *= scale
    return norm


@dataclass
class AdamState:
    m_weights: list[np.ndarray]
    v_weights: list[np.ndarray]
    m_biases: list[np.ndarray]
    v_biases: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: MlpParams) -> "AdamState":
        return cls(
            m_weights=[np.zeros_like(w) for w in params.weights],
            v_weights=[np.zeros_like(w) for w in params.weights],
            m_biases=[np.zeros_like(b) for b in params.biases],
            v_biases=[np.zeros_like(b) for b in params.biases],
        )


def adam_step(params: MlpParams, grads, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999,
              eps_adam: float = 1e-8):
    """Standard bias-corrected Adam update, applied in place."""
    weight_grads, bias_grads = grads
    state.t += 1
    c1 = 1.0 - beta1**state.t
    c2 = 1.0 - beta2**state.t
    for p, g, m, v in zip(params.weights, weight_grads, state.m_weights, state.v_weights):
        m *= beta1
        m += (1 - beta1) * g
        v *= beta2
        v += (1 - beta2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps_adam)
    for p, g, m, v in zip(params.biases, bias_grads, state.m_biases, state.v_biases):
        m *= beta1
        m += (1 - beta1) * g
        v *= beta2
        v += (1 - beta2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps_adam)


@dataclass
class TrainSettings:
    episodes: int = 200
    steps_per_episode: int = 60
    batch_size: int = 32
    replay_capacity: int = 200
    lr: float = 0.01
    gamma: float = 0.9
    schedule: qlearning.ExplorationSchedule = field(
        default_factory=qlearning.ExplorationSchedule
    )
    clone_period: int = 100
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    clip_norm: float = 10.0
    double: bool = True
    train_on: str = "reward_penalized"
    hidden: tuple[int, ...] = (64, 64, 64)

    def __post_init__(self):
        if self.batch_size > self.replay_capacity:
            raise ValueError("batch must not exceed replay capacity")
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")


@dataclass
class TrainResult:
    params: MlpParams
    target_params: MlpParams
    adam: AdamState
    episodes: list[dict]
    reward_scale: float


def _episode_row(episode, records, losses, epsilon):
    n = len(records)
    transmitted = sum(r["transmitted"] for r in records)
    generated = sum(r["generated"] for r in records)
    row = {
        "episode": episode,
        "reward_raw": sum(r["reward_raw"] for r in records) / n,
        "reward_penalized": sum(r["reward_penalized"] for r in records) / n,
        "loss": sum(losses) / len(losses) if losses else None,
        "epsilon": epsilon,
        "aaoi_s": sum(r["aaoi_s"] for r in records) / n,
        "ee_bits_per_joule_per_hz": sum(r["ee_bits_per_joule_per_hz"] for r in records) / n,
        "r_total_bps": sum(r["r_total_bps"] for r in records) / n,
        "p_total_w": sum(r["p_total_w"] for r in records) / n,
        "transmitted_ratio": (transmitted / generated) if generated else 1.0,
        "cpu_energy_j": sum(r["cpu_energy_j"] for r in records) / n,
    }
    return row


def train(env: NetworkEnv, scheme, settings: TrainSettings,
          rng: np.random.Generator) -> TrainResult:
    """Epsilon-greedy DQN training loop over the scheme's action catalog.

    One environment step per iteration: act, store the transition with its
    cached next-state feasibility mask, and after the replay warm-up run one
    gradient step per iteration, cloning the target every ``clone_period``
    environment steps.
    """
    catalog = scheme.catalog
    params = init_mlp(
        [env.state_dim, *settings.hidden, len(catalog)], rng
    )
    target = clone_target(params)
    adam = AdamState.zeros_like(params)
    memory = ReplayMemory(settings.replay_capacity)
    reward_scale = 0.0
    episode_rows = []
    t_global = 0

    for episode in range(1, settings.episodes + 1):
        state = env.reset()
        mask = scheme.mask(env)
        records, losses = [], []
        epsilon = 0.0
        for _ in range(settings.steps_per_episode):
            epsilon = qlearning.decay_epsilon(settings.schedule, t_global)
            if rng.uniform() < epsilon:
                choices = np.flatnonzero(mask)
                action = int(choices[rng.integers(len(choices))])
            else:
                action = masked_argmax(forward(params, state), mask)

            next_state, _, record = scheme.apply(env, action, rng)
            next_mask = scheme.mask(env)
            records.append(record)
            train_reward = record[settings.train_on]
            reward_scale = max(reward_scale, abs(train_reward))
            memory.push(Transition(state, action, train_reward, next_state, next_mask))
            t_global += 1

            if len(memory) >= settings.batch_size:
                batch = memory.sample(settings.batch_size, rng)
                loss, grads = bellman_loss(
                    params, target, batch, settings.gamma,
                    double=settings.double,
                    reward_scale=reward_scale or 1.0,
                )
                clip_gradients(grads, settings.clip_norm)
                adam_step(params, grads, adam, settings.lr,
                          settings.beta1, settings.beta2, settings.eps_adam)
                losses.append(loss)
            if t_global % settings.clone_period == 0:
                target = clone_target(params)
            state, mask = next_state, next_mask
        episode_rows.append(_episode_row(episode, records, losses, epsilon))
    return TrainResult(params, target, adam, episode_rows, reward_scale)


def greedy_evaluate(env: NetworkEnv, scheme, params: MlpParams,
                    episodes: int, steps_per_episode: int,
                    rng: np.random.Generator) -> list[dict]:
    """Roll out the greedy policy without learning; one row per episode."""
    rows = []
    for episode in range(1, episodes + 1):
        state = env.reset()
        mask = scheme.mask(env)
        records = []
        for _ in range(steps_per_episode):
            action = masked_argmax(forward(params, state), mask)
            state, _, record = scheme.apply(env, action, rng)
            mask = scheme.mask(env)
            records.append(record)
        rows.append(_episode_row(episode, records, [], 0.0))
    return rows


# ------------------------------------------------------------------ checkpoint

CHECKPOINT_MAGIC = "aoisched-checkpoint v1"


def save_checkpoint(path, params: MlpParams, adam: AdamState):
    """Textual dump: layer sizes, then row-major weights, biases, and Adam
    moments, one array section per line group.  Stable and diffable."""
    lines = [CHECKPOINT_MAGIC]
    sizes = params.layer_sizes
    lines.append("layers " + " ".join(str(s) for s in sizes))
    lines.append(f"adam_t {adam.t}")

    def emit(tag, arrays):
        for i, arr in enumerate(arrays):
            flat = np.asarray(arr, dtype=float).ravel()
            lines.append(f"{tag} {i} {' '.join(repr(float(v)) for v in flat)}")

    emit("weights", params.weights)
    emit("biases", params.biases)
    emit("adam_m_weights", adam.m_weights)
    emit("adam_v_weights", adam.v_weights)
    emit("adam_m_biases", adam.m_biases)
    emit("adam_v_biases", adam.v_biases)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path) -> tuple[MlpParams, AdamState]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise ValueError(f"not a recognized checkpoint file: {path}")
    sizes = [int(v) for v in lines[1].split()[1:]]
    adam_t = int(lines[2].split()[1])
    sections: dict[tuple[str, int], np.ndarray] = {}
    for line in lines[3:]:
        if not line:
            continue
        tag, idx, *values = line.split()
        sections[(tag, int(idx))] = np.asarray([float(v) for v in values])
    n_layers = len(sizes) - 1
    weights = [
        sections[("weights", i)].reshape(sizes[i], sizes[i + 1])
        for i in range(n_layers)
    ]
    biases = [sections[("biases", i)] for i in range(n_layers)]
    params = MlpParams(weights=weights, biases=biases)
    adam = AdamState(
        m_weights=[sections[("adam_m_weights", i)].reshape(w.shape) for i, w in enumerate(weights)],
        v_weights=[sections[("adam_v_weights", i)].reshape(w.shape) for i, w in enumerate(weights)],
        m_biases=[sections[("adam_m_biases", i)] for i in range(n_layers)],
        v_biases=[sections[("adam_v_biases", i)] for i in range(n_layers)],
        t=adam_t,
    )
    return params, adam
