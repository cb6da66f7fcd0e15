"""Collect/update loops for PPO and SAC with optional observation quantization.

Quantization only changes which store the buffer uses; the learners always
see dequantized observations and never branch on it.
"""

from __future__ import annotations

import csv
import math
import time
from collections import deque
from dataclasses import dataclass, fields
from typing import Iterable

import numpy as np

from obsquant.algo.ppo import PpoConfig, PpoModel, ppo_update
from obsquant.algo.sac import SacConfig, SacModel, SacOptimizers, sac_update
from obsquant.buffer.replay import ReplayBuffer
from obsquant.buffer.rollout import RolloutBuffer
from obsquant.envs import make_env
from obsquant.nn import Adam
from obsquant.quant import QuantScheme, make_scheme

DEFAULT_DECIMALS = {"ppo": 1, "sac": 2}
DEFAULT_BOUND = 127.0

CSV_COLUMNS = ("step", "return_mean", "return_std", "ms_per_step", "loss_policy", "loss_value_or_q", "alpha")


@dataclass
class TrainRecord:
    step: int
    return_mean: float
    return_std: float
    ms_per_step: float
    loss_policy: float
    loss_value_or_q: float
    alpha: float

    def curve_key(self) -> tuple:
        """Everything except wall-clock timing, for reproducibility checks."""
        return (self.step, self.return_mean, self.return_std, self.loss_policy, self.loss_value_or_q, self.alpha)


def default_scheme(algo: str, bound: float = DEFAULT_BOUND, decimals: int | None = None) -> QuantScheme:
    return make_scheme(bound, DEFAULT_DECIMALS[algo] if decimals is None else decimals)


def write_csv(records: Iterable[TrainRecord], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([r.step] + [repr(float(getattr(r, c))) for c in CSV_COLUMNS[1:]])


def read_csv(path) -> list[TrainRecord]:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    types = {f.name: f.type for f in fields(TrainRecord)}
    return [TrainRecord(**{k: (int(v) if types[k] in (int, "int") else float(v)) for k, v in row.items()}) for row in rows]


class _Tracker:
    def __init__(self, window: int):
        self.returns: deque[float] = deque(maxlen=window)
        self.current = 0.0
        self.t0 = time.perf_counter()
        self.last_step = 0

    def reward(self, r: float, done: bool) -> None:
        self.current += r
        if done:
            self.returns.append(self.current)
            self.current = 0.0

    def record(self, step: int, loss_policy: float, loss_value: float, alpha: float) -> TrainRecord:
        now = time.perf_counter()
        ms = 1000.0 * (now - self.t0) / max(step - self.last_step, 1)
        self.t0, self.last_step = now, step
        if self.returns:
            mean, std = float(np.mean(self.returns)), float(np.std(self.returns))
        else:
            mean = std = math.nan
        return TrainRecord(step, mean, std, ms, loss_policy, loss_value, alpha)


def _rngs(seed: int):
    ss = np.random.SeedSequence(seed)
    env_ss, init_ss, act_ss, upd_ss = ss.spawn(4)
    return (int(env_ss.generate_state(1)[0]), np.random.default_rng(init_ss),
            np.random.default_rng(act_ss), np.random.default_rng(upd_ss))


def _scale_action(a: np.ndarray, low: float, high: float) -> np.ndarray:
    return low + 0.5 * (a + 1.0) * (high - low)


def train_sac(env_name: str, total_steps: int, scheme: QuantScheme | None, seed: int,
              cfg: SacConfig | None = None, log_every: int = 1000, window: int = 10) -> list[TrainRecord]:
    cfg = cfg or SacConfig()
    env = make_env(env_name)
    spec = env.spec
    env_seed, init_rng, act_rng, upd_rng = _rngs(seed)
    model = SacModel(spec.obs_dim, spec.act_dim, cfg, init_rng)
    opt = SacOptimizers(model, cfg)
    buf = ReplayBuffer(min(cfg.buffer_size, max(total_steps, 1)), spec.obs_dim, spec.act_dim, scheme)

    tracker = _Tracker(window)
    records: list[TrainRecord] = []
    losses = None
    obs = env.reset(seed=env_seed)
    for step in range(1, total_steps + 1):
        if step <= cfg.learning_starts:
            a = act_rng.uniform(-1.0, 1.0, spec.act_dim)
        else:
            a = model.act(obs, act_rng)
        res = env.step(_scale_action(a, spec.action_low, spec.action_high))
        # time-limit truncation is not a terminal state for bootstrapping
        buf.add(obs, a, res.reward, res.obs, res.terminated)
        tracker.reward(res.reward, res.done)
        obs = env.reset() if res.done else res.obs

        if step > cfg.learning_starts and step % cfg.train_freq == 0 and buf.size >= cfg.batch_size:
            for _ in range(cfg.gradient_steps):
                losses = sac_update(model, opt, buf, cfg, upd_rng)
        if step % log_every == 0 or step == total_steps:
            if losses is None:
                records.append(tracker.record(step, math.nan, math.nan, model.alpha))
            else:
                records.append(tracker.record(step, losses.policy, losses.q, losses.alpha))
    return records


def train_ppo(env_name: str, total_steps: int, scheme: QuantScheme | None, seed: int,
              cfg: PpoConfig | None = None, log_every: int = 1000, window: int = 10) -> list[TrainRecord]:
    cfg = cfg or PpoConfig()
    env = make_env(env_name)
    spec = env.spec
    env_seed, init_rng, act_rng, upd_rng = _rngs(seed)
    model = PpoModel(spec.obs_dim, spec.act_dim, cfg, init_rng)
    opt = Adam(model.params, lr=cfg.lr, eps=cfg.adam_eps)
    rollout = RolloutBuffer(cfg.n_steps, spec.obs_dim, spec.act_dim, scheme)

    tracker = _Tracker(window)
    records: list[TrainRecord] = []
    losses = None
    obs = env.reset(seed=env_seed)
    episode_start = True
    for step in range(1, total_steps + 1):
        action, value, logp = model.act(obs, act_rng)
        res = env.step(np.clip(action, spec.action_low, spec.action_high))
        reward = res.reward
        if res.truncated and not res.terminated:
            reward += cfg.gamma * model.predict_value(res.obs)
        rollout.add(obs, action, reward, episode_start, value, logp)
        tracker.reward(res.reward, res.done)
        obs = env.reset() if res.done else res.obs
        episode_start = res.done

        if rollout.full:
            rollout.finalize(model.predict_value(obs), cfg.gamma, cfg.gae_lambda, last_episode_start=episode_start)
            losses = ppo_update(model, opt, rollout, cfg, upd_rng)
            rollout.reset()
        if step % log_every == 0 or step == total_steps:
            if losses is None:
                records.append(tracker.record(step, math.nan, math.nan, math.nan))
            else:
                records.append(tracker.record(step, losses.policy, losses.value, math.nan))
    return records


def train(algo: str, env_name: str, total_steps: int, quantize: bool = False,
          scheme: QuantScheme | None = None, seed: int = 0, config=None, log_every: int = 1000,
          window: int = 10) -> list[TrainRecord]:
    """Train one agent and return its learning curve.

    With ``quantize`` and no explicit scheme, the default bound 127 and
    1 decimal (PPO) or 2 decimals (SAC) are used.
    """
    if algo not in DEFAULT_DECIMALS:
        raise ValueError(f"unknown algorithm {algo!r}")
    if total_steps < 0:
        raise ValueError("total_steps must be non-negative")
    if quantize and scheme is None:
        scheme = default_scheme(algo)
    if not quantize:
        scheme = None
    runner = train_ppo if algo == "ppo" else train_sac
    return runner(env_name, total_steps, scheme, seed, config, log_every=log_every, window=window)
