"""Optimization loop: Adam with coupled weight decay, cosine-annealed
learning rate, aligned random 256-crop batching, checkpointing, and
line-delimited JSON logging.

All randomness is derived from np.random.default_rng([seed, epoch]), so
a run is fully determined by (seed, data, config) and resuming from an
epoch-boundary checkpoint is bit-exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .data import ImagePair
from .errors import ConfigError, ShapeError, TrainingDiverged
from .losses import LossWeights, build_supervision, total_loss_terms
from .metrics import psnr_y, ssim_y
from .model import DPMformer, derain_image, save_checkpoint
from .tensor import Tensor, backward


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 2
    crop: int = 256
    lr_max: float = 1e-4
    lr_min: float = 1e-6
    beta1: float = 0.9
    beta2: float = 0.999
    weight_decay: float = 1e-8
    adam_eps: float = 1e-8
    seed: int = 0
    loss: LossWeights = LossWeights()
    eval_every: int = 1
    branch_weight: float = 1.0

    def validate(self) -> list[str]:
        problems = list(self.loss.validate())
        if self.epochs < 1:
            problems.append(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            problems.append(f"batch_size must be >= 1, got {self.batch_size}")
        if self.crop < 16 or self.crop % 16:
            problems.append(f"crop must be a positive multiple of 16, got {self.crop}")
        if self.lr_min > self.lr_max:
            problems.append(f"lr_min {self.lr_min} exceeds lr_max {self.lr_max}")
        if not 0 <= self.beta1 < 1 or not 0 <= self.beta2 < 1:
            problems.append("beta1/beta2 must lie in [0,1)")
        if self.adam_eps <= 0:
            problems.append(f"adam_eps must be positive, got {self.adam_eps}")
        if self.weight_decay < 0:
            problems.append(f"weight_decay must be non-negative, got {self.weight_decay}")
        if self.branch_weight < 0:
            problems.append(f"branch_weight must be non-negative, got {self.branch_weight}")
        return problems


def cosine_lr(step: int, total_steps: int, lr_max: float, lr_min: float) -> float:
    """lr_min + 0.5*(lr_max - lr_min)*(1 + cos(pi*step/total)); hits both
    endpoints exactly."""
    if total_steps < 1:
        raise ConfigError(f"total_steps must be >= 1, got {total_steps}")
    if not 0 <= step <= total_steps:
        raise ConfigError(f"step {step} outside [0, {total_steps}]")
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + math.cos(math.pi * step / total_steps))


@dataclass
class OptimizerState:
    """Per-parameter Adam moments, keyed by parameter path."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_step(named_params, state: OptimizerState, lr: float, cfg: TrainConfig):
    """Classic Adam with bias correction; weight decay is coupled (L2
    term added to the gradient before the moment updates)."""
    state.t += 1
    t = state.t
    bc1 = 1.0 - cfg.beta1**t
    bc2 = 1.0 - cfg.beta2**t
    for name, p in named_params:
        if p.grad is None:
            raise ShapeError(f"parameter {name!r} has no gradient; call backward() first")
        g = p.grad.data
        if cfg.weight_decay:
            g = g + np.asarray(cfg.weight_decay, p.data.dtype) * p.data
        m = state.m.get(name)
        if m is None:
            m = np.zeros_like(p.data)
            state.m[name] = m
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * (g * g)
        update = (m / bc1) / (np.sqrt(v / bc2) + cfg.adam_eps)
        p.data = p.data - np.asarray(lr, p.data.dtype) * update.astype(p.data.dtype)


@dataclass
class StepRecord:
    step: int
    epoch: int
    lr: float
    loss_total: float
    loss_char: float
    loss_edge: float
    loss_fft: float


@dataclass
class EvalRecord:
    epoch: int
    step: int
    psnr: float
    ssim: float


@dataclass
class TrainReport:
    steps: list[StepRecord] = field(default_factory=list)
    evals: list[EvalRecord] = field(default_factory=list)
    checkpoints: list[str] = field(default_factory=list)


def _crop_pair(pair: ImagePair, crop: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    _, _, h, w = pair.rainy.shape
    if crop > h or crop > w:
        raise ConfigError(f"crop {crop} exceeds image extent {h}x{w} (pair {pair.id!r})")
    # offsets are multiples of 16 so every crop is model-compatible
    oy = int(rng.integers((h - crop) // 16 + 1)) * 16
    ox = int(rng.integers((w - crop) // 16 + 1)) * 16
    sl = (slice(None), slice(None), slice(oy, oy + crop), slice(ox, ox + crop))
    return pair.rainy.data[sl][0], pair.clean.data[sl][0]


def evaluate(model: DPMformer, pairs: list[ImagePair]) -> tuple[float, float]:
    """Mean Y-channel PSNR/SSIM of the model over pairs."""
    psnrs, ssims = [], []
    for pair in pairs:
        restored = derain_image(model, pair.rainy)
        psnrs.append(psnr_y(restored, pair.clean))
        ssims.append(ssim_y(restored, pair.clean))
    return float(np.mean(psnrs)), float(np.mean(ssims))


def train(
    model: DPMformer,
    pairs: list[ImagePair],
    cfg: TrainConfig,
    val_pairs: Optional[list[ImagePair]] = None,
    out_dir=None,
    optimizer_state: Optional[OptimizerState] = None,
    start_epoch: int = 0,
    log_fn=None,
) -> TrainReport:
    """Run the optimization loop; returns per-step loss history and
    per-eval metrics. Raises TrainingDiverged on a non-finite loss."""
    problems = cfg.validate()
    if problems:
        raise ConfigError(problems)
    if not pairs:
        raise ConfigError("training requires at least one image pair")

    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    log_file = (out_dir / "train_log.jsonl").open("a") if out_dir is not None else None

    def emit(record: dict):
        line = json.dumps(record, sort_keys=True)
        if log_file is not None:
            log_file.write(line + "\n")
            log_file.flush()
        if log_fn is not None:
            log_fn(record)

    eval_pairs = val_pairs if val_pairs else pairs
    steps_per_epoch = math.ceil(len(pairs) / cfg.batch_size)
    total_steps = cfg.epochs * steps_per_epoch
    state = optimizer_state if optimizer_state is not None else OptimizerState()
    named = list(model.named_parameters())
    report = TrainReport()
    global_step = start_epoch * steps_per_epoch

    try:
        for epoch in range(start_epoch, cfg.epochs):
            rng = np.random.default_rng([cfg.seed, epoch])
            order = rng.permutation(len(pairs))
            crops = [_crop_pair(pairs[i], cfg.crop, rng) for i in order]
            for lo in range(0, len(crops), cfg.batch_size):
                batch = crops[lo : lo + cfg.batch_size]
                rainy = Tensor(np.stack([b[0] for b in batch]))
                clean = Tensor(np.stack([b[1] for b in batch]))
                lr = cosine_lr(global_step, total_steps, cfg.lr_max, cfg.lr_min)

                output = model(rainy)
                sup = build_supervision(output, clean, branch_weight=cfg.branch_weight)
                total, char, edge, fft = total_loss_terms(sup, cfg.loss)
                terms = {
                    "loss_total": total.item(),
                    "loss_char": char.item(),
                    "loss_edge": edge.item(),
                    "loss_fft": fft.item(),
                }
                if not all(math.isfinite(v) for v in terms.values()):
                    raise TrainingDiverged(global_step, lr, terms)

                model.zero_grad()
                backward(total)
                adam_step(named, state, lr, cfg)

                record = StepRecord(step=global_step, epoch=epoch, lr=lr, **terms)
                report.steps.append(record)
                emit({"step": global_step, "epoch": epoch, "lr": lr, **terms})
                global_step += 1

            last_epoch = epoch == cfg.epochs - 1
            if last_epoch or (cfg.eval_every and (epoch + 1) % cfg.eval_every == 0):
                psnr, ssim = evaluate(model, eval_pairs)
                report.evals.append(EvalRecord(epoch=epoch, step=global_step, psnr=psnr, ssim=ssim))
                emit({"step": global_step, "epoch": epoch, "lr": lr, "psnr": psnr, "ssim": ssim})
                if out_dir is not None:
                    name = "checkpoint_final.ckpt" if last_epoch else f"checkpoint_epoch{epoch + 1:04d}.ckpt"
                    path = out_dir / name
                    save_checkpoint(
                        path,
                        model,
                        optimizer_state=state,
                        trainer_state={"epoch": epoch + 1, "global_step": global_step},
                    )
                    report.checkpoints.append(str(path))
    finally:
        if log_file is not None:
            log_file.close()
    return report
