"""Finite-difference verification of the analytic gradients.

Backs the grad-check command: compares the instance-loss embedding gradients,
the full network pipeline gradients, and the classifier-baseline gradients
against central differences. The ``corrupt`` hook deliberately perturbs the
analytic side so the checker's failure path can be exercised.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .batch import EmbeddingBatch
from .cce import ClassifierHead, cce_gradients, cce_loss
from .ice import ice_gradients_exact, ice_loss
from .linalg import normalize_rows_forward
from .mlp import MlpEmbedder, backward, forward

TOLERANCE = 1e-4
FD_STEP = 1e-5


def central_difference(f: Callable[[np.ndarray], float], x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient of a scalar function of a flat vector."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for t in range(x.size):
        plus = x.copy()
        minus = x.copy()
        plus[t] += step
        minus[t] -= step
        grad[t] = (f(plus) - f(minus)) / (2.0 * step)
    return grad


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Largest absolute difference, relative to the larger gradient magnitude."""
    a = np.asarray(analytic, dtype=np.float64)
    b = np.asarray(numeric, dtype=np.float64)
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-12)
    return float(np.max(np.abs(a - b)) / scale)


def _maybe_corrupt(grads: np.ndarray, corrupt: bool) -> np.ndarray:
    if not corrupt:
        return grads
    return grads * 1.01 + 1e-3


def random_batch(rng: np.random.Generator, num_classes: int, per_class: int, dim: int) -> EmbeddingBatch:
    rows, _ = normalize_rows_forward(rng.normal(size=(num_classes * per_class, dim)))
    labels = np.repeat(np.arange(num_classes), per_class)
    return EmbeddingBatch(rows, labels)


@dataclass
class GradCheckReport:
    """One named comparison plus optional per-row errors for the worst case."""

    name: str
    max_rel_error: float
    row_errors: list[float] | None = None


def check_ice_embedding_gradients(
    seed: int,
    num_classes: int = 3,
    per_class: int = 3,
    dim: int = 6,
    n_batches: int = 20,
    s_values: tuple[float, ...] = (1.0, 8.0, 32.0),
    corrupt: bool = False,
) -> GradCheckReport:
    """Instance-loss gradients on the embeddings vs central differences."""
    rng = np.random.default_rng(seed)
    worst = -1.0
    worst_rows: list[float] = []
    for b in range(n_batches):
        scale = s_values[b % len(s_values)]
        batch = random_batch(rng, num_classes, per_class, dim)
        analytic = _maybe_corrupt(ice_gradients_exact(batch, scale).grads, corrupt)
        labels = batch.labels

        def loss_of(flat: np.ndarray) -> float:
            rows = flat.reshape(batch.embeddings.shape)
            return ice_loss(EmbeddingBatch(rows, labels, validate=False), scale)

        numeric = central_difference(loss_of, batch.embeddings.ravel()).reshape(analytic.shape)
        err = max_rel_error(analytic, numeric)
        if err > worst:
            worst = err
            scale_mag = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-12)
            worst_rows = [
                float(np.max(np.abs(analytic[r] - numeric[r])) / scale_mag)
                for r in range(analytic.shape[0])
            ]
    return GradCheckReport("ice-embeddings", worst, worst_rows)


def check_pipeline_gradients(
    seed: int,
    in_dim: int = 6,
    hidden_dim: int = 5,
    embed_dim: int = 4,
    num_classes: int = 3,
    per_class: int = 3,
    scale: float = 8.0,
    corrupt: bool = False,
) -> GradCheckReport:
    """d(ice_loss o forward)/d(parameters) vs central differences over the parameters."""
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(num_classes), per_class)
    # Resample until the point is well-conditioned for central differences:
    # no dead rows, no pre-activation within a kink's reach of zero.
    attempt = 0
    while True:
        net = MlpEmbedder.initialize(in_dim, hidden_dim, embed_dim, seed=seed + 1000 * attempt)
        inputs = rng.normal(size=(num_classes * per_class, in_dim)) + 0.3
        try:
            emb, cache = forward(net, inputs)
        except Exception:
            attempt += 1
            continue
        if np.min(np.abs(cache.pre_act)) > 1e-3 and np.min(cache.norms) > 0.05:
            break
        attempt += 1
    emb_grads = ice_gradients_exact(EmbeddingBatch(emb, labels), scale).grads
    pg = backward(net, cache, emb_grads)
    analytic = np.concatenate([pg.w1.ravel(), pg.b1.ravel(), pg.w2.ravel(), pg.b2.ravel()])
    analytic = _maybe_corrupt(analytic, corrupt)

    probe = net.copy()

    def loss_of(flat: np.ndarray) -> float:
        probe.set_params_vector(flat)
        out, _ = forward(probe, inputs)
        return ice_loss(EmbeddingBatch(out, labels), scale)

    numeric = central_difference(loss_of, net.params_vector())
    return GradCheckReport("mlp-pipeline", max_rel_error(analytic, numeric))


def check_cce_gradients(
    seed: int,
    rows: int = 6,
    dim: int = 5,
    num_classes: int = 4,
    corrupt: bool = False,
) -> GradCheckReport:
    """Classifier-baseline gradients (features and weights) vs central differences."""
    rng = np.random.default_rng(seed)
    features = rng.normal(size=(rows, dim))
    labels = rng.integers(0, num_classes, size=rows)
    head = ClassifierHead.initialize(num_classes, dim, seed=seed)

    feat_g, weight_g = cce_gradients(features, labels, head)
    analytic = np.concatenate([feat_g.ravel(), weight_g.ravel()])
    analytic = _maybe_corrupt(analytic, corrupt)

    split = features.size

    def loss_of(flat: np.ndarray) -> float:
        f = flat[:split].reshape(features.shape)
        w = flat[split:].reshape(head.weights.shape)
        return cce_loss(f, labels, ClassifierHead(w))

    numeric = central_difference(loss_of, np.concatenate([features.ravel(), head.weights.ravel()]))
    return GradCheckReport("cce", max_rel_error(analytic, numeric))
