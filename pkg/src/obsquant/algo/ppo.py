from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from obsquant.buffer.rollout import RolloutBatch, RolloutBuffer
from obsquant.nn import Adam, DivergenceError, Mlp, clip_grad_norm, gaussian_entropy, gaussian_log_prob


@dataclass
class PpoConfig:
    n_steps: int = 2048
    batch_size: int = 64
    lr: float = 3e-4
    gamma: float = 0.99
    gae_lambda: float = 0.95
    vf_coef: float = 0.5
    ent_coef: float = 0.0
    max_grad_norm: float = 0.5
    clip_range: float = 0.2
    n_epochs: int = 10
    hidden: tuple[int, ...] = (64, 64)
    adam_eps: float = 1e-5
    normalize_advantage: bool = True

    def __post_init__(self):
        if not 0 < self.clip_range < 1:
            raise ValueError("clip_range must lie in (0, 1)")
        for name in ("n_steps", "batch_size", "lr", "n_epochs", "max_grad_norm"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


class PpoModel:
    """Separate Gaussian policy (state-independent log-std) and value network."""

    def __init__(self, obs_dim: int, act_dim: int, cfg: PpoConfig, rng: np.random.Generator):
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.policy = Mlp.create([obs_dim, *cfg.hidden, act_dim], "tanh", rng, init="orthogonal", out_gain=0.01)
        self.value = Mlp.create([obs_dim, *cfg.hidden, 1], "tanh", rng, init="orthogonal", out_gain=1.0)
        self.log_std = np.zeros(act_dim)

    @property
    def params(self) -> list[np.ndarray]:
        return [*self.policy.params, self.log_std, *self.value.params]

    def act(self, obs: np.ndarray, rng: np.random.Generator):
        """Sample an action for one observation; returns ``(action, value, log_prob)``."""
        mean = self.policy(obs)
        action = mean + np.exp(self.log_std) * rng.standard_normal(self.act_dim)
        logp, _, _ = gaussian_log_prob(mean, self.log_std, action)
        return action, float(self.value(obs)[0]), float(logp)

    def predict_value(self, obs: np.ndarray) -> float:
        return float(self.value(obs)[0])


@dataclass
class PpoLosses:
    loss: float
    policy: float
    value: float
    entropy: float
    clip_fraction: float


def ppo_loss_and_grads(model: PpoModel, batch: RolloutBatch, cfg: PpoConfig):
    """Clipped-surrogate + value + entropy loss and its gradients w.r.t. ``model.params``."""
    n = len(batch)
    adv = batch.advantages
    if cfg.normalize_advantage and n > 1:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)

    mean, pcache = model.policy.forward(batch.obs)
    logp, dlogp_dmean, dlogp_dlogstd = gaussian_log_prob(mean, model.log_std, batch.actions)
    ratio = np.exp(logp - batch.log_probs)
    surr1 = ratio * adv
    surr2 = np.clip(ratio, 1.0 - cfg.clip_range, 1.0 + cfg.clip_range) * adv
    policy_loss = -float(np.mean(np.minimum(surr1, surr2)))
    # min() picks the unclipped term exactly when its gradient is live
    g_logp = -(surr1 * (surr1 <= surr2)) / n

    entropy = gaussian_entropy(model.log_std)
    values, vcache = model.value.forward(batch.obs)
    values = values[:, 0]
    value_loss = float(np.mean((batch.returns - values) ** 2))

    loss = policy_loss + cfg.vf_coef * value_loss - cfg.ent_coef * entropy
    if not math.isfinite(loss):
        raise DivergenceError("non-finite PPO loss")

    g_policy, _ = model.policy.backward(pcache, g_logp[:, None] * dlogp_dmean)
    g_log_std = (g_logp[:, None] * dlogp_dlogstd).sum(axis=0) - cfg.ent_coef
    g_values = cfg.vf_coef * 2.0 * (values - batch.returns) / n
    g_value, _ = model.value.backward(vcache, g_values[:, None])

    clip_frac = float(np.mean(np.abs(ratio - 1.0) > cfg.clip_range))
    losses = PpoLosses(loss, policy_loss, value_loss, entropy, clip_frac)
    return losses, [*g_policy, g_log_std, *g_value]


def ppo_update(model: PpoModel, optimizer: Adam, rollout: RolloutBuffer, cfg: PpoConfig,
               rng: np.random.Generator) -> PpoLosses:
    """Several epochs of shuffled minibatch Adam steps on one finalized rollout."""
    data = rollout.batch()
    n = len(data)
    params = model.params
    last = None
    for _ in range(cfg.n_epochs):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            mb = data.subset(perm[start : start + cfg.batch_size])
            last, grads = ppo_loss_and_grads(model, mb, cfg)
            clip_grad_norm(grads, cfg.max_grad_norm)
            optimizer.step(params, grads)
    return last
