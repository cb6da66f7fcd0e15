from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from obsquant.buffer.replay import ReplayBatch, ReplayBuffer
from obsquant.nn import Adam, DivergenceError, Mlp, squashed_backward, squashed_from_noise


@dataclass
class SacConfig:
    lr: float = 3e-4
    buffer_size: int = 1_000_000
    batch_size: int = 256
    tau: float = 0.005
    gamma: float = 0.99
    train_freq: int = 1
    gradient_steps: int = 1
    learning_starts: int = 100
    init_alpha: float = 1.0
    target_entropy: float | None = None  # None -> -act_dim
    hidden: tuple[int, ...] = (64, 64)

    def __post_init__(self):
        if not 0 < self.tau <= 1:
            raise ValueError("tau must lie in (0, 1]")
        if self.batch_size > self.buffer_size:
            raise ValueError("batch_size cannot exceed buffer_size")
        if self.batch_size <= 0 or self.lr <= 0:
            raise ValueError("batch_size and lr must be positive")


class SacModel:
    """Tanh-squashed Gaussian actor, twin Q critics with Polyak targets, learned temperature."""

    def __init__(self, obs_dim: int, act_dim: int, cfg: SacConfig, rng: np.random.Generator):
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.actor = Mlp.create([obs_dim, *cfg.hidden, 2 * act_dim], "relu", rng)
        self.q1 = Mlp.create([obs_dim + act_dim, *cfg.hidden, 1], "relu", rng)
        self.q2 = Mlp.create([obs_dim + act_dim, *cfg.hidden, 1], "relu", rng)
        self.q1_target = self.q1.copy()
        self.q2_target = self.q2.copy()
        self.log_alpha = np.array([math.log(cfg.init_alpha)])
        self.target_entropy = float(-act_dim if cfg.target_entropy is None else cfg.target_entropy)

    @property
    def alpha(self) -> float:
        return float(math.exp(self.log_alpha[0]))

    def head(self, obs: np.ndarray):
        out, cache = self.actor.forward(obs)
        return out[..., : self.act_dim], out[..., self.act_dim :], cache

    def act(self, obs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        mean, raw_log_std, _ = self.head(obs)
        return squashed_from_noise(mean, raw_log_std, rng.standard_normal(self.act_dim)).action


@dataclass
class SacLosses:
    q: float
    policy: float
    alpha_loss: float
    alpha: float
    entropy: float


def alpha_loss_and_grad(log_alpha: float, log_probs: np.ndarray, target_entropy: float):
    """Temperature loss ``-log_alpha * mean(logp + target_entropy)`` and d/dlog_alpha."""
    g = -float(np.mean(log_probs + target_entropy))
    return log_alpha * g, g


def q_targets(model: SacModel, batch: ReplayBatch, alpha: float, gamma: float, next_noise: np.ndarray) -> np.ndarray:
    mean, raw_log_std, _ = model.head(batch.next_obs)
    s = squashed_from_noise(mean, raw_log_std, next_noise)
    q_in = np.concatenate([batch.next_obs, s.action], axis=1)
    next_q = np.minimum(model.q1_target(q_in), model.q2_target(q_in))[:, 0] - alpha * s.log_prob
    return batch.rewards + gamma * (1.0 - batch.dones) * next_q


def critic_loss_and_grads(model: SacModel, batch: ReplayBatch, targets: np.ndarray):
    """Sum of half-MSE losses of both critics against fixed targets."""
    n = len(batch)
    q_in = np.concatenate([batch.obs, batch.actions], axis=1)
    loss = 0.0
    grads = []
    for q in (model.q1, model.q2):
        pred, cache = q.forward(q_in)
        err = pred[:, 0] - targets
        loss += 0.5 * float(np.mean(err * err))
        grads.append(q.backward(cache, (err / n)[:, None])[0])
    if not math.isfinite(loss):
        raise DivergenceError("non-finite critic loss")
    return loss, grads[0], grads[1]


def actor_loss_and_grads(model: SacModel, obs: np.ndarray, noise: np.ndarray, alpha: float, head=None):
    """``mean(alpha * logp - min(Q1, Q2))`` over reparameterized actions.

    ``head`` may carry a precomputed ``model.head(obs)`` for the current actor.
    """
    n = len(obs)
    mean, raw_log_std, cache = head if head is not None else model.head(obs)
    s = squashed_from_noise(mean, raw_log_std, noise)
    q_in = np.concatenate([obs, s.action], axis=1)
    q1, c1 = model.q1.forward(q_in)
    q2, c2 = model.q2.forward(q_in)
    first = q1 <= q2
    qmin = np.where(first, q1, q2)[:, 0]
    loss = float(np.mean(alpha * s.log_prob - qmin))
    if not math.isfinite(loss):
        raise DivergenceError("non-finite actor loss")
    _, gin1 = model.q1.backward(c1, np.where(first, -1.0 / n, 0.0), need_input_grad=True, need_param_grads=False)
    _, gin2 = model.q2.backward(c2, np.where(first, 0.0, -1.0 / n), need_input_grad=True, need_param_grads=False)
    g_action = (gin1 + gin2)[:, model.obs_dim :]
    g_mean, g_log_std = squashed_backward(s, g_action, np.full(n, alpha / n))
    grads, _ = model.actor.backward(cache, np.concatenate([g_mean, g_log_std], axis=1))
    return loss, grads, s


def polyak(target: Mlp, online: Mlp, tau: float) -> None:
    for t, o in zip(target.params, online.params):
        t *= 1.0 - tau
        t += tau * o


class SacOptimizers:
    def __init__(self, model: SacModel, cfg: SacConfig):
        self.actor = Adam(model.actor.params, lr=cfg.lr)
        self.q1 = Adam(model.q1.params, lr=cfg.lr)
        self.q2 = Adam(model.q2.params, lr=cfg.lr)
        self.alpha = Adam([model.log_alpha], lr=cfg.lr)


def sac_update(model: SacModel, opt: SacOptimizers, buf: ReplayBuffer, cfg: SacConfig,
               rng: np.random.Generator) -> SacLosses:
    """One gradient step on temperature, both critics and the actor, then Polyak targets."""
    if buf.size < cfg.batch_size:
        raise ValueError(f"replay buffer holds {buf.size} < batch_size {cfg.batch_size}")
    batch = buf.sample(cfg.batch_size, rng)
    noise = rng.standard_normal((cfg.batch_size, model.act_dim))
    next_noise = rng.standard_normal((cfg.batch_size, model.act_dim))

    alpha = model.alpha
    head = model.head(batch.obs)
    logp = squashed_from_noise(head[0], head[1], noise).log_prob
    a_loss, a_grad = alpha_loss_and_grad(float(model.log_alpha[0]), logp, model.target_entropy)
    opt.alpha.step([model.log_alpha], [np.array([a_grad])])

    targets = q_targets(model, batch, alpha, cfg.gamma, next_noise)
    q_loss, g1, g2 = critic_loss_and_grads(model, batch, targets)
    opt.q1.step(model.q1.params, g1)
    opt.q2.step(model.q2.params, g2)

    # actor parameters are untouched by the steps above, so the head is reusable
    pi_loss, g_actor, s = actor_loss_and_grads(model, batch.obs, noise, alpha, head)
    opt.actor.step(model.actor.params, g_actor)

    polyak(model.q1_target, model.q1, cfg.tau)
    polyak(model.q2_target, model.q2, cfg.tau)
    return SacLosses(q_loss, pi_loss, a_loss, alpha, -float(np.mean(s.log_prob)))
