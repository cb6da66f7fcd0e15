"""Byte-level memory accounting for PPO and SAC training state.

Total footprint is model bytes plus buffer bytes: policy and value networks
plus the rollout batch for PPO, policy and twin Q networks plus the replay
buffer for SAC.  Observation fields are counted bit-packed when a scheme is
given; every other field stays at ``float_bytes`` (flags at one byte).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

from obsquant.quant import QuantScheme

ALGOS = ("ppo", "sac")

# Which per-entry fields each buffer layout stores.  "sar" is the bare
# (s, a, r) tuple; "full" is everything the buffers in this package hold.
LAYOUTS = {
    ("ppo", "sar"): dict(obs_fields=1, float_fields=("action", "reward"), flag_fields=()),
    ("ppo", "full"): dict(
        obs_fields=1,
        float_fields=("action", "reward", "value", "log_prob", "advantage", "return"),
        flag_fields=("episode_start",),
    ),
    ("sac", "sar"): dict(obs_fields=1, float_fields=("action", "reward"), flag_fields=()),
    ("sac", "full"): dict(obs_fields=2, float_fields=("action", "reward"), flag_fields=("done",)),
}

DEFAULT_LAYOUT = {"ppo": "full", "sac": "full"}


@dataclass
class NetworkSpec:
    layer_sizes: Sequence[int]
    extra_params: int = 0

    @property
    def n_params(self) -> int:
        sizes = list(self.layer_sizes)
        return sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:])) + self.extra_params


def default_networks(algo: str, obs_dim: int, act_dim: int, hidden: Sequence[int] = (64, 64)) -> dict[str, NetworkSpec]:
    hidden = list(hidden)
    if algo == "ppo":
        return {
            # state-independent log-std vector lives alongside the policy
            "policy": NetworkSpec([obs_dim, *hidden, act_dim], extra_params=act_dim),
            "value": NetworkSpec([obs_dim, *hidden, 1]),
        }
    if algo == "sac":
        q = [obs_dim + act_dim, *hidden, 1]
        return {
            "policy": NetworkSpec([obs_dim, *hidden, 2 * act_dim]),
            "q1": NetworkSpec(q),
            "q2": NetworkSpec(q),
        }
    raise ValueError(f"unknown algorithm {algo!r}")


@dataclass
class MemoryReport:
    model_bytes: dict[str, int]
    buffer_bytes: int
    obs_bytes: int
    total_bytes: int
    obs_fraction_of_buffer: float
    buffer_fraction_of_total: float
    reduction_ratio: float
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _buffer_bytes(algo, layout, obs_dim, act_dim, entries, scheme, float_bytes):
    fields = LAYOUTS[(algo, layout)]
    if scheme is None:
        per_obs_field = entries * obs_dim * float_bytes
    else:
        per_obs_field = -(-entries * obs_dim * scheme.total_bits // 8)
    obs_bytes = fields["obs_fields"] * per_obs_field
    widths = {"action": act_dim}
    other = sum(entries * widths.get(f, 1) * float_bytes for f in fields["float_fields"])
    other += entries * len(fields["flag_fields"])
    return obs_bytes, obs_bytes + other


def memory_report(
    algo: str,
    obs_dim: int,
    act_dim: int,
    buffer_entries: int,
    scheme: QuantScheme | None = None,
    networks: Mapping[str, NetworkSpec] | None = None,
    float_bytes: int = 8,
    layout: str | None = None,
    hidden: Sequence[int] = (64, 64),
) -> MemoryReport:
    if algo not in ALGOS:
        raise ValueError(f"algo must be one of {ALGOS}, got {algo!r}")
    if obs_dim <= 0 or act_dim <= 0 or buffer_entries <= 0:
        raise ValueError("obs_dim, act_dim and buffer_entries must be positive")
    if float_bytes not in (4, 8):
        raise ValueError("float_bytes must be 4 or 8")
    layout = layout or DEFAULT_LAYOUT[algo]
    if (algo, layout) not in LAYOUTS:
        raise ValueError(f"unknown layout {layout!r}")
    if networks is None:
        networks = default_networks(algo, obs_dim, act_dim, hidden)

    model = {name: net.n_params * float_bytes for name, net in networks.items()}
    model["total"] = sum(model.values())

    obs_bytes, buffer_bytes = _buffer_bytes(algo, layout, obs_dim, act_dim, buffer_entries, scheme, float_bytes)
    _, baseline_buffer = _buffer_bytes(algo, layout, obs_dim, act_dim, buffer_entries, None, float_bytes)
    total = model["total"] + buffer_bytes
    baseline_total = model["total"] + baseline_buffer

    return MemoryReport(
        model_bytes=model,
        buffer_bytes=buffer_bytes,
        obs_bytes=obs_bytes,
        total_bytes=total,
        obs_fraction_of_buffer=obs_bytes / buffer_bytes,
        buffer_fraction_of_total=buffer_bytes / total,
        reduction_ratio=baseline_total / total,
        provenance={
            "algo": algo,
            "obs_dim": obs_dim,
            "act_dim": act_dim,
            "buffer_entries": buffer_entries,
            "layout": layout,
            "float_bytes": float_bytes,
            "scheme": None if scheme is None else scheme.to_dict(),
            "baseline_total_bytes": baseline_total,
        },
    )
