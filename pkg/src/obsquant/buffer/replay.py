from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from obsquant.buffer.packed import make_obs_store
from obsquant.quant import QuantScheme


@dataclass
class Transition:
    obs: np.ndarray
    action: np.ndarray
    reward: float
    next_obs: np.ndarray
    done: bool


@dataclass
class ReplayBatch:
    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_obs: np.ndarray
    dones: np.ndarray

    def __len__(self) -> int:
        return len(self.rewards)


class ReplayBuffer:
    """FIFO ring buffer of transitions for off-policy learning.

    With a scheme, ``obs`` and ``next_obs`` are held bit-packed and come back
    dequantized from :meth:`sample`; everything else stays full precision.
    Single writer; reads are only safe while no write is in progress.
    """

    def __init__(self, capacity: int, obs_dim: int, act_dim: int, scheme: QuantScheme | None = None):
        if capacity <= 0 or obs_dim <= 0 or act_dim <= 0:
            raise ValueError("capacity, obs_dim and act_dim must be positive")
        self.capacity = int(capacity)
        self.obs_dim = int(obs_dim)
        self.act_dim = int(act_dim)
        self.scheme = scheme
        self.obs = make_obs_store(scheme, obs_dim, capacity)
        self.next_obs = make_obs_store(scheme, obs_dim, capacity)
        self.actions = np.zeros((capacity, act_dim), dtype=np.float64)
        self.rewards = np.zeros(capacity, dtype=np.float64)
        self.dones = np.zeros(capacity, dtype=np.uint8)
        self.pos = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    @property
    def nbytes(self) -> int:
        return (
            self.obs.nbytes + self.next_obs.nbytes
            + self.actions.nbytes + self.rewards.nbytes + self.dones.nbytes
        )

    def add(self, obs, action, reward: float, next_obs, done: bool) -> None:
        action = np.asarray(action, dtype=np.float64)
        if action.shape != (self.act_dim,):
            raise ValueError(f"expected action of shape ({self.act_dim},), got {action.shape}")
        # both stores validate shape and finiteness before anything is written
        self.obs.write(self.pos, obs)
        self.next_obs.write(self.pos, next_obs)
        self.actions[self.pos] = action
        self.rewards[self.pos] = reward
        self.dones[self.pos] = bool(done)
        self.pos = (self.pos + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def push(self, t: Transition) -> None:
        self.add(t.obs, t.action, t.reward, t.next_obs, t.done)

    def get(self, indices) -> ReplayBatch:
        idx = np.asarray(indices, dtype=np.int64)
        return ReplayBatch(
            obs=self.obs.read_many(idx),
            actions=self.actions[idx],
            rewards=self.rewards[idx],
            next_obs=self.next_obs.read_many(idx),
            dones=self.dones[idx].astype(np.float64),
        )

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if self.size == 0:
            raise ValueError("cannot sample from an empty replay buffer")
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        return rng.integers(0, self.size, size=batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator) -> ReplayBatch:
        """Uniform sample with replacement from the stored transitions."""
        return self.get(self.sample_indices(batch_size, rng))
