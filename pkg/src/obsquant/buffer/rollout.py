from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from obsquant.buffer.packed import make_obs_store
from obsquant.quant import QuantScheme


def compute_gae(rewards, values, episode_starts, last_value: float, gamma: float, lam: float,
                last_episode_start: bool = False):
    """GAE(lambda) advantages and return targets for one rollout.

    ``episode_starts[t]`` marks observation ``t`` as the first of an episode,
    so no value is bootstrapped across it.  ``last_episode_start`` plays the
    same role for the observation following the rollout, whose value
    estimate is ``last_value``.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    starts = np.asarray(episode_starts, dtype=np.float64)
    if not (rewards.shape == values.shape == starts.shape) or rewards.ndim != 1:
        raise ValueError("rewards, values and episode_starts must be 1-D of equal length")
    n = len(rewards)
    advantages = np.zeros(n)
    gae = 0.0
    for t in range(n - 1, -1, -1):
        if t == n - 1:
            non_terminal = 1.0 - float(last_episode_start)
            next_value = last_value
        else:
            non_terminal = 1.0 - starts[t + 1]
            next_value = values[t + 1]
        delta = rewards[t] + gamma * next_value * non_terminal - values[t]
        gae = delta + gamma * lam * non_terminal * gae
        advantages[t] = gae
    return advantages, advantages + values


@dataclass
class RolloutBatch:
    obs: np.ndarray
    actions: np.ndarray
    values: np.ndarray
    log_probs: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    def subset(self, idx) -> "RolloutBatch":
        return RolloutBatch(self.obs[idx], self.actions[idx], self.values[idx],
                            self.log_probs[idx], self.advantages[idx], self.returns[idx])


class RolloutBuffer:
    """Fixed-length on-policy batch, refilled from scratch every iteration.

    Only observations are quantized; value, log-prob, advantage and return
    are kept at full precision.
    """

    def __init__(self, n_steps: int, obs_dim: int, act_dim: int, scheme: QuantScheme | None = None):
        if n_steps <= 0 or obs_dim <= 0 or act_dim <= 0:
            raise ValueError("n_steps, obs_dim and act_dim must be positive")
        self.n_steps = int(n_steps)
        self.obs_dim = int(obs_dim)
        self.act_dim = int(act_dim)
        self.scheme = scheme
        self.obs = make_obs_store(scheme, obs_dim, n_steps)
        self.actions = np.zeros((n_steps, act_dim))
        self.rewards = np.zeros(n_steps)
        self.episode_starts = np.zeros(n_steps, dtype=np.uint8)
        self.values = np.zeros(n_steps)
        self.log_probs = np.zeros(n_steps)
        self.advantages: np.ndarray | None = None
        self.returns: np.ndarray | None = None
        self.pos = 0

    @property
    def full(self) -> bool:
        return self.pos == self.n_steps

    @property
    def finalized(self) -> bool:
        return self.advantages is not None

    @property
    def nbytes(self) -> int:
        extra = 2 * self.n_steps * 8 if self.finalized else 0
        return (self.obs.nbytes + self.actions.nbytes + self.rewards.nbytes
                + self.episode_starts.nbytes + self.values.nbytes + self.log_probs.nbytes + extra)

    def reset(self) -> None:
        self.pos = 0
        self.advantages = None
        self.returns = None

    def add(self, obs, action, reward: float, episode_start: bool, value: float, log_prob: float) -> None:
        if self.full:
            raise IndexError(f"rollout buffer already holds {self.n_steps} steps")
        action = np.asarray(action, dtype=np.float64)
        if action.shape != (self.act_dim,):
            raise ValueError(f"expected action of shape ({self.act_dim},), got {action.shape}")
        self.obs.write(self.pos, obs)
        self.actions[self.pos] = action
        self.rewards[self.pos] = reward
        self.episode_starts[self.pos] = bool(episode_start)
        self.values[self.pos] = value
        self.log_probs[self.pos] = log_prob
        self.pos += 1

    def finalize(self, last_value: float, gamma: float, lam: float, last_episode_start: bool = False) -> None:
        if not self.full:
            raise RuntimeError(f"rollout holds {self.pos}/{self.n_steps} steps; cannot finalize")
        self.advantages, self.returns = compute_gae(
            self.rewards, self.values, self.episode_starts, last_value, gamma, lam, last_episode_start
        )

    def batch(self) -> RolloutBatch:
        if not self.finalized:
            raise RuntimeError("rollout must be finalized before reading")
        return RolloutBatch(
            obs=self.obs.read_many(np.arange(self.n_steps)),
            actions=self.actions.copy(),
            values=self.values.copy(),
            log_probs=self.log_probs.copy(),
            advantages=self.advantages.copy(),
            returns=self.returns.copy(),
        )
