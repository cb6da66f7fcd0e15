"""Small numpy MLPs with hand-written reverse-mode gradients and Adam.

Parameters are flat lists ``[W0, b0, W1, b1, ...]`` with ``W`` shaped
``(fan_in, fan_out)``; inputs are batched row-wise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


class DivergenceError(FloatingPointError):
    """A loss or gradient became NaN or infinite."""


def orthogonal(shape: tuple[int, int], gain: float, rng: np.random.Generator) -> np.ndarray:
    rows, cols = shape
    flat = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(flat)
    q *= np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return gain * q[:rows, :cols]


@dataclass
class Mlp:
    sizes: tuple[int, ...]
    activation: str
    params: list[np.ndarray]

    @classmethod
    def create(cls, sizes: Sequence[int], activation: str, rng: np.random.Generator,
               init: str = "fan_in", hidden_gain: float = math.sqrt(2), out_gain: float = 1.0) -> "Mlp":
        if activation not in ("tanh", "relu"):
            raise ValueError(f"unsupported activation {activation!r}")
        sizes = tuple(int(s) for s in sizes)
        params = []
        n_layers = len(sizes) - 1
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            if init == "orthogonal":
                gain = out_gain if i == n_layers - 1 else hidden_gain
                params += [orthogonal((fan_in, fan_out), gain, rng), np.zeros(fan_out)]
            elif init == "fan_in":
                k = 1.0 / math.sqrt(fan_in)
                params += [rng.uniform(-k, k, (fan_in, fan_out)), rng.uniform(-k, k, fan_out)]
            else:
                raise ValueError(f"unknown init {init!r}")
        return cls(sizes, activation, params)

    @property
    def n_layers(self) -> int:
        return len(self.sizes) - 1

    def copy(self) -> "Mlp":
        return Mlp(self.sizes, self.activation, [p.copy() for p in self.params])

    def forward(self, x: np.ndarray):
        """Returns ``(output, cache)``; the cache feeds :meth:`backward`."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.sizes[0]:
            raise ValueError(f"input dim {x.shape[-1]} != {self.sizes[0]}")
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite network input")
        h = x
        acts = [x]
        last = self.n_layers - 1
        for i in range(self.n_layers):
            h = h @ self.params[2 * i]
            h += self.params[2 * i + 1]
            if i < last:
                if self.activation == "tanh":
                    np.tanh(h, out=h)
                else:
                    np.maximum(h, 0.0, out=h)
            acts.append(h)
        return h, acts

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache, grad_out: np.ndarray, need_input_grad: bool = False,
                 need_param_grads: bool = True):
        """Parameter gradients (same layout as ``params``) and the input gradient."""
        acts = cache
        grad_out = np.asarray(grad_out, dtype=np.float64)
        if grad_out.shape != acts[-1].shape:
            raise ValueError(f"upstream gradient shape {grad_out.shape} != output {acts[-1].shape}")
        grads: list[np.ndarray] = [None] * len(self.params)  # type: ignore[list-item]
        g = grad_out
        for i in range(self.n_layers - 1, -1, -1):
            h_in = acts[i]
            if not need_param_grads:
                pass
            elif h_in.ndim == 1:
                grads[2 * i] = np.outer(h_in, g)
                grads[2 * i + 1] = g.copy()
            else:
                grads[2 * i] = h_in.T @ g
                grads[2 * i + 1] = g.sum(axis=0)
            if i > 0 or need_input_grad:
                g = g @ self.params[2 * i].T
                if i > 0:
                    if self.activation == "tanh":
                        g = g * (1.0 - h_in * h_in)
                    else:
                        g = g * (h_in > 0)
        return grads, (g if need_input_grad else None)


class Adam:
    """Bias-corrected Adam over a list of arrays, updated in place."""

    def __init__(self, params: list[np.ndarray], lr: float = 3e-4, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.shapes = [p.shape for p in params]
        bounds = np.cumsum([0] + [p.size for p in params])
        self.slices = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
        self.m = np.zeros(bounds[-1])
        self.v = np.zeros(bounds[-1])
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if len(params) != len(self.shapes) or len(grads) != len(self.shapes):
            raise ValueError("parameter list does not match optimizer state")
        for p, g, shape in zip(params, grads, self.shapes):
            if p.shape != shape or g.shape != shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {shape}")
        g = np.concatenate([x.ravel() for x in grads])
        if not np.all(np.isfinite(g)):
            raise DivergenceError("non-finite gradient")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        self.m *= b1
        self.m += (1.0 - b1) * g
        self.v *= b2
        self.v += (1.0 - b2) * (g * g)
        update = (self.lr / c1) * self.m / (np.sqrt(self.v / c2) + self.eps)
        for p, sl in zip(params, self.slices):
            p -= update[sl].reshape(p.shape)


def clip_grad_norm(grads: list[np.ndarray], max_norm: float) -> float:
    """Scale ``grads`` in place so their joint L2 norm is at most ``max_norm``."""
    norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if norm > max_norm:
        scale = max_norm / (norm + 1e-6)
        for g in grads:
            g *= scale
    return norm


def gaussian_log_prob(mean: np.ndarray, log_std: np.ndarray, actions: np.ndarray):
    """Diagonal Gaussian log-density summed over the last axis, with its gradients.

    Returns ``(logp, dlogp/dmean, dlogp/dlog_std)``.
    """
    std = np.exp(log_std)
    z = (actions - mean) / std
    logp = np.sum(-0.5 * z * z - log_std - _HALF_LOG_2PI, axis=-1)
    return logp, z / std, z * z - 1.0


def gaussian_entropy(log_std: np.ndarray) -> float:
    return float(np.sum(log_std + 0.5 + _HALF_LOG_2PI))


@dataclass
class SquashedSample:
    action: np.ndarray
    log_prob: np.ndarray
    pre_tanh: np.ndarray
    std: np.ndarray
    noise: np.ndarray
    in_range: np.ndarray


def squashed_from_noise(mean: np.ndarray, raw_log_std: np.ndarray, noise: np.ndarray) -> SquashedSample:
    """tanh(mean + std * noise) with its log-density, for fixed noise."""
    if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(raw_log_std))):
        raise DivergenceError("non-finite policy head output")
    log_std = np.clip(raw_log_std, LOG_STD_MIN, LOG_STD_MAX)
    std = np.exp(log_std)
    u = mean + std * noise
    a = np.tanh(u)
    # log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u)), stable for large |u|
    log_jac = 2.0 * (math.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))
    logp = np.sum(-0.5 * noise * noise - log_std - _HALF_LOG_2PI - log_jac, axis=-1)
    in_range = (raw_log_std >= LOG_STD_MIN) & (raw_log_std <= LOG_STD_MAX)
    return SquashedSample(a, logp, u, std, noise, in_range)


def sample_squashed(mean: np.ndarray, raw_log_std: np.ndarray, rng: np.random.Generator) -> SquashedSample:
    return squashed_from_noise(mean, raw_log_std, rng.standard_normal(np.shape(mean)))


def squashed_backward(s: SquashedSample, grad_action: np.ndarray, grad_log_prob: np.ndarray):
    """Chain upstream gradients on (action, log_prob) back to (mean, raw log-std)."""
    gl = np.asarray(grad_log_prob)[..., None]
    da_du = 1.0 - s.action * s.action
    # d logp / du = 2 tanh(u); d logp / dlog_std (at fixed u) = -1
    g_u = grad_action * da_du + gl * 2.0 * s.action
    g_mean = g_u
    g_log_std = g_u * s.std * s.noise - gl
    return g_mean, g_log_std * s.in_range


def squashed_log_density(action: np.ndarray, mean: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    """Log-density of tanh(N(mean, std^2)) evaluated at ``action`` in (-1, 1)."""
    u = np.arctanh(action)
    std = np.exp(log_std)
    z = (u - mean) / std
    return np.sum(-0.5 * z * z - log_std - _HALF_LOG_2PI - np.log1p(-action * action), axis=-1)
