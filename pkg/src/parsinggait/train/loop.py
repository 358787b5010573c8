"""Training loop with deterministic sampling, CSV history and resumable checkpoints."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..model import checkpoint as ckpt
from ..model.config import ModelConfig
from ..model.network import ParsingGait
from .config import TrainConfig, lr_at
from .losses import combined_loss
from .optim import SGD
from .sampler import SequencePool, pk_sample


class NonFiniteLossError(FloatingPointError):
    pass


@dataclass
class TrainState:
    model: ParsingGait
    optimizer: SGD
    rng: np.random.Generator
    epoch: int = 0
    history: list = field(default_factory=list)     # (epoch, mean_loss, lr)


def _rng_state_json(rng):
    return json.loads(json.dumps(rng.bit_generator.state))


def init_state(train_config: TrainConfig, model_config: ModelConfig, pool: SequencePool) -> TrainState:
    model = ParsingGait(replace(model_config, num_ids=len(pool.subject_ids)))
    model.train()
    opt = SGD(model.named_parameters(), train_config.momentum, train_config.weight_decay)
    rng = np.random.default_rng(np.random.SeedSequence(train_config.seed, spawn_key=(0x7A,)))
    return TrainState(model, opt, rng)


def iterations_per_epoch(config: TrainConfig, pool: SequencePool) -> int:
    if config.iterations_per_epoch:
        return config.iterations_per_epoch
    return max(1, math.ceil(len(pool) / (config.batch_ids * config.samples_per_id)))


def train_step(state: TrainState, config: TrainConfig, pool: SequencePool, lr: float) -> float:
    frames, targets = pk_sample(pool, config.batch_ids, config.samples_per_id,
                                config.frames_per_sample, state.rng)
    model = state.model
    model.zero_grad()
    emb = model(frames)
    loss = combined_loss(emb, targets, model, config.alpha, config.beta, config.triplet_margin)
    value = float(loss.data)
    if not math.isfinite(value):
        return value
    loss.backward()
    state.optimizer.step(lr)
    return value


def save_state(path, state: TrainState, train_config: TrainConfig, subjects) -> Path:
    extra = {"train": train_config.to_dict(), "epoch": state.epoch,
             "rng_state": _rng_state_json(state.rng), "subjects": list(subjects),
             "history": [list(h) for h in state.history]}
    return ckpt.save_model(path, state.model, extra, state.optimizer.state_dict())


def load_state(path, pool: SequencePool):
    """Rebuild a :class:`TrainState` from a training checkpoint (model left in train mode)."""
    config, tensors = ckpt.load(path)
    if "train" not in config or "rng_state" not in config:
        raise ckpt.CheckpointError(f"{path} is not a training checkpoint")
    train_config = TrainConfig.from_dict(config["train"])
    model = ParsingGait(ModelConfig.from_dict(config["model"]))
    model.load_state_dict({k: v for k, v in tensors.items() if not k.startswith("optim.")})
    model.train()
    opt = SGD(model.named_parameters(), train_config.momentum, train_config.weight_decay)
    opt.load_state_dict(tensors)
    rng = np.random.default_rng()
    rng.bit_generator.state = config["rng_state"]
    state = TrainState(model, opt, rng, int(config["epoch"]),
                       [tuple(h) for h in config.get("history", [])])
    return state, train_config


def write_history(path, history):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "mean_loss", "lr"])
        for epoch, loss, lr in history:
            w.writerow([epoch, repr(float(loss)), repr(float(lr))])


@dataclass
class TrainResult:
    model: ParsingGait
    history: list
    checkpoint: Path | None


def train_run(train_config: TrainConfig, model_config: ModelConfig, manifest=None, out_dir=None,
              pool: SequencePool | None = None, resume=None, log=None) -> TrainResult:
    """Train from scratch (or resume) and return the final model in eval mode.

    With ``out_dir`` set, writes ``history.csv``, ``config.json`` and
    ``checkpoint.pgck`` (plus ``checkpoint_eNNNN.pgck`` every
    ``checkpoint_every`` epochs).
    """
    if pool is None:
        if manifest is None:
            raise ValueError("either a manifest or a sequence pool is required")
        pool = SequencePool.from_manifest(manifest, "train")
    if resume is not None:
        state, train_config = load_state(resume, pool)
    else:
        state = init_state(train_config, model_config, pool)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "config.json", "w", encoding="utf-8") as fh:
            json.dump({"train": train_config.to_dict(), "model": state.model.config.to_dict()},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
    iters = iterations_per_epoch(train_config, pool)
    step = state.epoch * iters
    last = None
    while state.epoch < train_config.epochs:
        lr = lr_at(state.epoch, train_config)
        losses = []
        for _ in range(iters):
            value = train_step(state, train_config, pool, lr)
            if not math.isfinite(value):
                raise NonFiniteLossError(
                    f"non-finite loss {value} at step {step} (epoch {state.epoch})")
            losses.append(value)
            step += 1
        state.history.append((state.epoch, float(np.mean(losses)), lr))
        if log is not None:
            log(f"epoch {state.epoch:4d}  loss {state.history[-1][1]:.4f}  lr {lr:g}")
        state.epoch += 1
        if out is not None and train_config.checkpoint_every and \
                state.epoch % train_config.checkpoint_every == 0:
            save_state(out / f"checkpoint_e{state.epoch:04d}.pgck", state, train_config,
                       pool.subject_ids)
    if out is not None:
        last = save_state(out / "checkpoint.pgck", state, train_config, pool.subject_ids)
        write_history(out / "history.csv", state.history)
    state.model.eval()
    return TrainResult(state.model, state.history, last)
