"""Training loop: record file in, checkpoint + loss curve out."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import torch

from .data import (NormStats, class_counts, encode_inputs,
                   median_frequency_weights, read_record_file, stack_labels)
from .losses import DEFAULT_BETAS, hybrid_loss
from .model import BeamSegVae, ModelConfig


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    betas: tuple = DEFAULT_BETAS
    epochs: int = 40
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    samples_per_scan: int = 32


@dataclass
class TrainResult:
    model: BeamSegVae
    stats: NormStats
    class_weights: np.ndarray
    curve: list          # per-epoch dicts: total / wce / lovasz / kl
    config: TrainConfig


def save_checkpoint(path, result: TrainResult) -> None:
    torch.save({
        "model_state": result.model.state_dict(),
        "model_config": result.model.config.__dict__,
        "betas": tuple(result.config.betas),
        "samples_per_scan": result.config.samples_per_scan,
        "norm_stats": {"range_scale": result.stats.range_scale,
                       "intensity_p99": result.stats.intensity_p99},
        "class_weights": result.class_weights.tolist(),
        "curve": result.curve,
    }, path)


def load_checkpoint(path):
    blob = torch.load(path, map_location="cpu", weights_only=False)
    config = ModelConfig(**blob["model_config"])
    model = BeamSegVae(config)
    model.load_state_dict(blob["model_state"])
    model.eval()
    stats = NormStats(**blob["norm_stats"])
    return model, stats, blob


def train(records, sensor, config: TrainConfig | None = None,
          stats: NormStats | None = None, log=print) -> TrainResult:
    """Train on labeled records; raises TrainingDiverged on a NaN loss."""
    config = config or TrainConfig()
    torch.manual_seed(config.seed)
    np.random.seed(config.seed)

    stats = stats or NormStats.fit(records, sensor)
    inputs = torch.from_numpy(encode_inputs(records, sensor, stats,
                                            config.model.input_variant))
    labels = torch.from_numpy(stack_labels(records))
    weights_np = median_frequency_weights(class_counts(labels.numpy()))
    weights = torch.from_numpy(weights_np.astype(np.float32))

    model = BeamSegVae(config.model)
    model.train()
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)

    n = inputs.shape[0]
    curve = []
    rng = np.random.default_rng(config.seed)
    start = time.monotonic()
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        sums = {"total": 0.0, "wce": 0.0, "lovasz": 0.0, "kl": 0.0}
        batches = 0
        for lo in range(0, n, config.batch_size):
            idx = torch.from_numpy(order[lo:lo + config.batch_size].copy())
            x, y = inputs[idx], labels[idx]
            optimizer.zero_grad()
            logits, mu, logvar = model(x)
            total, parts = hybrid_loss(logits, y, weights, mu, logvar,
                                       config.betas)
            if not torch.isfinite(total):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch} batch {batches}: "
                    f"wce={parts['wce'].item():.4g} "
                    f"lovasz={parts['lovasz'].item():.4g} "
                    f"kl={parts['kl'].item():.4g}")
            total.backward()
            optimizer.step()
            sums["total"] += float(total.item())
            for k in ("wce", "lovasz", "kl"):
                sums[k] += float(parts[k].item())
            batches += 1
        epoch_means = {k: v / batches for k, v in sums.items()}
        curve.append(epoch_means)
        if log:
            log(f"epoch {epoch + 1:3d}/{config.epochs}: "
                f"loss {epoch_means['total']:.4f} "
                f"(wce {epoch_means['wce']:.4f} "
                f"ls {epoch_means['lovasz']:.4f} "
                f"kl {epoch_means['kl']:.2f}) "
                f"[{time.monotonic() - start:.0f} s]")
    model.eval()
    return TrainResult(model=model, stats=stats, class_weights=weights_np,
                       curve=curve, config=config)
