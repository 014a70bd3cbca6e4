"""Categorical cross entropy over learned class-level context vectors.

The reference point for the instance-matching loss and a plumbing check for
the optimizer. Unlike the instance loss, this head stores one weight vector
per training class, so its memory grows linearly with the total class count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, normalize_rows_backward, normalize_rows_forward


@dataclass
class ClassifierHead:
    """One learned context vector per training class; weights are (T, d)."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        self.weights = as_matrix(self.weights)
        if self.weights.shape[0] < 2:
            raise ValueError(f"need at least 2 classes, got {self.weights.shape[0]}")

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def initialize(cls, num_classes: int, dim: int, seed: int) -> "ClassifierHead":
        rng = np.random.default_rng(seed)
        return cls(rng.normal(0.0, np.sqrt(1.0 / dim), size=(num_classes, dim)))


def _check_inputs(features, labels, head: ClassifierHead):
    feats = as_matrix(features)
    lab = np.asarray(labels, dtype=np.int64)
    if lab.ndim != 1 or lab.shape[0] != feats.shape[0]:
        raise ValueError(f"labels shape {lab.shape} does not match {feats.shape[0]} rows")
    if feats.shape[1] != head.dim:
        raise ValueError(f"feature dim {feats.shape[1]} does not match head dim {head.dim}")
    if np.any(lab < 0) or np.any(lab >= head.num_classes):
        raise ValueError(f"labels must lie in [0, {head.num_classes}), got {lab.min()}..{lab.max()}")
    return feats, lab


def cce_loss(features, labels, head: ClassifierHead, normalize_features: bool = False) -> float:
    """Summed negative log softmax probability of each row's own class logit."""
    feats, lab = _check_inputs(features, labels, head)
    if normalize_features:
        feats, _ = normalize_rows_forward(feats)
    logits = feats @ head.weights.T
    lse = np.logaddexp.reduce(logits, axis=1)
    return float(np.sum(lse - logits[np.arange(len(lab)), lab]))


def cce_gradients(features, labels, head: ClassifierHead, normalize_features: bool = False):
    """Exact gradients of cce_loss w.r.t. the features and the head weights."""
    feats, lab = _check_inputs(features, labels, head)
    if normalize_features:
        unit, norms = normalize_rows_forward(feats)
        used = unit
    else:
        used = feats
    logits = used @ head.weights.T
    lse = np.logaddexp.reduce(logits, axis=1)
    probs = np.exp(logits - lse[:, None])
    probs[np.arange(len(lab)), lab] -= 1.0
    feature_grads = probs @ head.weights
    weight_grads = probs.T @ used
    if normalize_features:
        feature_grads = normalize_rows_backward(unit, norms, feature_grads)
    return feature_grads, weight_grads
