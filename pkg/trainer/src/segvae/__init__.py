"""Stochastic per-beam segmenter for 2D lidar scans.

A 1D-convolutional VAE over normalized (range, intensity) sweeps: the
Gaussian latent makes every forward pass a sample, so repeated decoding
yields both a segmentation and a per-beam uncertainty estimate. Talks to
the labeling toolkit exclusively through its documented file formats.
"""

from .data import (NormStats, SensorInfo, encode_inputs,
                   median_frequency_weights, read_record_file)
from .losses import hybrid_loss, kl_gaussian, lovasz_softmax, \
    weighted_cross_entropy
from .model import BeamSegVae, ModelConfig
from .predict import predict_records, predict_to_files
from .train import (TrainConfig, TrainingDiverged, TrainResult,
                    load_checkpoint, save_checkpoint, train)

__version__ = "0.1.0"
