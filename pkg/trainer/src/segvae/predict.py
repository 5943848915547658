"""Stochastic prediction: S label samples per scan plus vote entropy."""

from __future__ import annotations

import math

import numpy as np
import torch

from .data import NormStats, encode_inputs, write_predictions, write_uncertainty
from .model import BeamSegVae


@torch.no_grad()
def predict_records(model: BeamSegVae, records, sensor, stats: NormStats,
                    n_samples: int = 32, seed: int = 0, batch_size: int = 16):
    """Sample ``n_samples`` segmentations per scan.

    Returns a list of (scene_id, frame, samples (S, n_beams), hard labels,
    entropy) tuples. Hard labels are the argmax of the mean softmax over
    samples; entropy is the per-beam entropy of the empirical label
    distribution across samples (0 = all samples agree).
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    model.eval()
    gen = torch.Generator().manual_seed(seed)
    inputs = torch.from_numpy(encode_inputs(records, sensor, stats,
                                            model.config.input_variant))
    out = []
    for lo in range(0, inputs.shape[0], batch_size):
        x = inputs[lo:lo + batch_size]
        mu, logvar = model.encode(x)
        std = torch.exp(0.5 * logvar)
        mean_probs = None
        votes = []
        for _ in range(n_samples):
            zeta = torch.randn(mu.shape, generator=gen)
            logits = model.decode(mu + std * zeta)
            probs = torch.softmax(logits, dim=1)
            mean_probs = probs if mean_probs is None else mean_probs + probs
            votes.append(logits.argmax(dim=1))
        samples = torch.stack(votes, dim=1)           # (B, S, n_beams)
        hard = (mean_probs / n_samples).argmax(dim=1)  # (B, n_beams)
        for b in range(x.shape[0]):
            rec = records[lo + b]
            sample_labels = samples[b].numpy()
            counts = np.stack([(sample_labels == c).sum(axis=0)
                               for c in range(model.config.num_classes)])
            freq = counts / n_samples
            with np.errstate(divide="ignore", invalid="ignore"):
                ent = -np.where(freq > 0, freq * np.log(freq), 0.0).sum(axis=0)
            out.append((rec.scene_id, rec.frame, sample_labels,
                        hard[b].numpy(), ent))
    return out


def predict_to_files(model, records, sensor, stats, prediction_path,
                     uncertainty_path=None, n_samples: int = 32,
                     seed: int = 0) -> None:
    results = predict_records(model, records, sensor, stats, n_samples, seed)
    write_predictions(prediction_path,
                      [(sid, frame, samples) for sid, frame, samples, _, _
                       in results])
    if uncertainty_path:
        write_uncertainty(uncertainty_path,
                          [(sid, frame, ent) for sid, frame, _, _, ent
                           in results])
