from obsquant.algo.ppo import PpoConfig, PpoLosses, PpoModel, ppo_loss_and_grads, ppo_update
from obsquant.algo.sac import (
    SacConfig,
    SacLosses,
    SacModel,
    SacOptimizers,
    actor_loss_and_grads,
    alpha_loss_and_grad,
    critic_loss_and_grads,
    polyak,
    q_targets,
    sac_update,
)
from obsquant.algo.train import CSV_COLUMNS, TrainRecord, default_scheme, read_csv, train, write_csv
from obsquant.buffer.rollout import compute_gae

__all__ = [
    "CSV_COLUMNS",
    "PpoConfig",
    "PpoLosses",
    "PpoModel",
    "SacConfig",
    "SacLosses",
    "SacModel",
    "SacOptimizers",
    "TrainRecord",
    "actor_loss_and_grads",
    "alpha_loss_and_grad",
    "compute_gae",
    "critic_loss_and_grads",
    "default_scheme",
    "polyak",
    "ppo_loss_and_grads",
    "ppo_update",
    "q_targets",
    "read_csv",
    "sac_update",
    "train",
    "write_csv",
]
