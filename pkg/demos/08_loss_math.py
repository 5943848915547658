"""The training-loss reference implementations.

These numpy functions define what any training-framework implementation of
the loss must compute; the trainer package is checked against them to 1e-5.

Run: python demos/08_loss_math.py
"""

import math

import numpy as np

from semlabel.loss_math import (hybrid_loss, kl_gaussian, lovasz_softmax,
                                median_frequency_weights,
                                weighted_cross_entropy)
from semlabel.scan_model import CLASS_NAMES, NUM_CLASSES

# class weights from a typically imbalanced count vector
counts = np.array([800, 150, 420, 90, 450, 260, 120, 330, 140, 4740])
weights = median_frequency_weights(counts)
print("median-frequency class weights (rare classes weigh more):")
for name, c, w in zip(CLASS_NAMES, counts, weights):
    print(f"  {name:<9} count {c:>5}  weight {w:6.3f}")

rng = np.random.default_rng(0)
n = 200
truth = rng.choice(NUM_CLASSES, size=n, p=counts / counts.sum())

# a sharpened random prediction field (columns sum to 1)
logits = rng.normal(0, 1, (NUM_CLASSES, n))
logits[truth, np.arange(n)] += 2.0
probs = np.exp(logits) / np.exp(logits).sum(axis=0)

wce = weighted_cross_entropy(probs, truth, weights)
ls = lovasz_softmax(probs, truth)
mu, logvar = rng.normal(0, 0.3, 16), rng.normal(0, 0.2, 16)
kl = kl_gaussian(mu, logvar)
total = hybrid_loss(probs, truth, weights, mu, logvar)
print(f"\nweighted cross entropy : {wce:.4f}")
print(f"lovasz-softmax         : {ls:.4f}   (one-hot correct would be 0)")
print(f"gaussian KL            : {kl:.4f}")
print(f"hybrid (1, 1, 0.01)    : {total:.4f} = "
      f"{wce:.4f} + {ls:.4f} + 0.01 * {kl:.4f}")

# the lovasz term is exactly the Jaccard distance on hard predictions
hard = np.zeros((NUM_CLASSES, 4))
hard[[9, 9, 4, 0], np.arange(4)] = 1.0
y = np.array([9, 4, 4, 0])
print(f"\nhard-prediction example: lovasz = {lovasz_softmax(hard, y):.4f}")
print("per present class this equals 1 - intersection/union of the "
      "predicted and true beam sets")
