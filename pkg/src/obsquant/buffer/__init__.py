from obsquant.buffer.memory import MemoryReport, NetworkSpec, default_networks, memory_report
from obsquant.buffer.packed import FloatObsStore, PackedObsStore, make_obs_store
from obsquant.buffer.replay import ReplayBatch, ReplayBuffer, Transition
from obsquant.buffer.rollout import RolloutBatch, RolloutBuffer, compute_gae

__all__ = [
    "FloatObsStore",
    "MemoryReport",
    "NetworkSpec",
    "PackedObsStore",
    "ReplayBatch",
    "ReplayBuffer",
    "RolloutBatch",
    "RolloutBuffer",
    "Transition",
    "compute_gae",
    "default_networks",
    "make_obs_store",
    "memory_report",
]
