"""Reference implementations of the segmentation training loss.

The trainer optimizes a weighted hybrid of three terms: a class-weighted
cross entropy (classification accuracy), a Lovasz-softmax term (a convex
surrogate that directly optimizes mean IoU), and the Gaussian KL regularizer
of the variational bottleneck:

    loss = b1 * wce + b2 * lovasz + b3 * kl,   default (b1, b2, b3) = (1, 1, 0.01)

Everything here is plain numpy with no training machinery; these functions
are the ground truth the trainer's tensor implementations are checked
against, and they double as property-test subjects.
"""

from __future__ import annotations

import numpy as np

from .scan_model import NUM_CLASSES

EPS = 1e-12

DEFAULT_BETAS = (1.0, 1.0, 0.01)


def median_frequency_weights(counts) -> np.ndarray:
    """Class weights w_c = median(f) / f_c from per-class point counts.

    f_c is the dataset-global class frequency; the median runs over classes
    with nonzero frequency.  Classes never observed get weight 0.
    """
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise ValueError("all class counts are zero")
    freq = counts / total
    nonzero = freq > 0
    med = float(np.median(freq[nonzero]))
    weights = np.zeros_like(freq)
    weights[nonzero] = med / freq[nonzero]
    return weights


def _check_field(probs: np.ndarray, truth: np.ndarray):
    probs = np.asarray(probs, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.int64).ravel()
    if probs.ndim != 2:
        raise ValueError("probability field must be (C, N)")
    if probs.shape[1] != truth.shape[0]:
        raise ValueError("probability field and truth length disagree")
    return probs, truth


def weighted_cross_entropy(probs, truth, weights) -> float:
    """Class-weighted negative log likelihood, normalized by the weight sum.

    -sum_i w_{y_i} log(max(p_{i,y_i}, eps)) / sum_i w_{y_i}.  Normalizing by
    the weight sum (not N) keeps the loss scale stable under reweighting.
    """
    probs, truth = _check_field(probs, truth)
    weights = np.asarray(weights, dtype=np.float64)
    w = weights[truth]
    wsum = w.sum()
    if wsum <= 0:
        raise ValueError("total weight of the batch is zero")
    p_true = probs[truth, np.arange(len(truth))]
    return float(-(w * np.log(np.maximum(p_true, EPS))).sum() / wsum)


def _lovasz_grad(gt_sorted: np.ndarray) -> np.ndarray:
    """Gradient of the Lovasz extension of the Jaccard set loss.

    For the ground-truth indicator sorted by descending error, with
    cumulative intersection I_k and union U_k, g_k is the first difference
    of the sequence 1 - I_k / U_k.
    """
    gts = gt_sorted.sum()
    intersection = gts - np.cumsum(gt_sorted)
    union = gts + np.cumsum(1.0 - gt_sorted)
    jaccard = 1.0 - intersection / union
    if len(gt_sorted) > 1:
        jaccard[1:] = jaccard[1:] - jaccard[:-1]
    return jaccard


def lovasz_softmax(probs, truth) -> float:
    """Lovasz-softmax loss: mean over classes present in the ground truth.

    Per class c the error vector is 1 - p_c where the truth is c and p_c
    elsewhere; sorted descending (stable) and dotted with the Lovasz-Jaccard
    gradient.  Equals 1 - Jaccard for one-hot probability fields.
    """
    probs, truth = _check_field(probs, truth)
    present = np.unique(truth)
    losses = []
    for c in present:
        fg = (truth == c).astype(np.float64)
        errors = np.where(fg > 0.5, 1.0 - probs[c], probs[c])
        order = np.argsort(-errors, kind="stable")
        errors_sorted = errors[order]
        grad = _lovasz_grad(fg[order])
        losses.append(float(errors_sorted @ grad))
    return float(np.mean(losses))


def kl_gaussian(mu, logvar) -> float:
    """KL(q || N(0, I)) for a diagonal Gaussian q = N(mu, exp(logvar))."""
    mu = np.asarray(mu, dtype=np.float64)
    logvar = np.asarray(logvar, dtype=np.float64)
    return float(-0.5 * np.sum(1.0 + logvar - mu ** 2 - np.exp(logvar)))


def hybrid_loss(probs, truth, weights, mu, logvar,
                betas=DEFAULT_BETAS) -> float:
    """Weighted sum of cross entropy, Lovasz-softmax, and Gaussian KL."""
    b1, b2, b3 = betas
    if b1 < 0 or b2 < 0 or b3 < 0:
        raise ValueError("betas must be non-negative")
    return (b1 * weighted_cross_entropy(probs, truth, weights)
            + b2 * lovasz_softmax(probs, truth)
            + b3 * kl_gaussian(mu, logvar))
