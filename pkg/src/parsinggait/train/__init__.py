"""Sampling, losses, optimisation and the training loop."""
from .config import TrainConfig, lr_at
from .loop import (NonFiniteLossError, TrainResult, TrainState, init_state, load_state,
                   save_state, train_run, train_step)
from .losses import combined_loss, id_loss, pairwise_distances, triplet_loss, triplet_mask
from .optim import SGD, sgd_step
from .sampler import SequencePool, crop_window, pk_sample

__all__ = [
    "TrainConfig", "lr_at", "NonFiniteLossError", "TrainResult", "TrainState", "init_state",
    "load_state", "save_state", "train_run", "train_step", "combined_loss", "id_loss",
    "pairwise_distances", "triplet_loss", "triplet_mask", "SGD", "sgd_step", "SequencePool",
    "crop_window", "pk_sample",
]
