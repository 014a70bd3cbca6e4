"""Instance-level matching probabilities, the instance cross entropy loss,
its per-pair weights, and both gradient modes.

Every sample in a batch serves as the anchor in turn. Each (anchor, positive)
pair defines its own matching distribution: a softmax over the scaled dot
product of that one positive against all of the anchor's negatives. The loss
is the summed negative log probability of every positive winning its own
distribution. The gradient magnitude each neighbor receives from an anchor is
its weight; weights come in three stages (raw, scaled, per-anchor normalized),
and the reweighted gradient mode replaces the exact magnitudes with the
normalized ones while keeping every direction unchanged.

All softmax arithmetic stays in the log domain (logaddexp), so large scale
values (for example scale 80 against similarity 1) cannot overflow, and
near-one probabilities keep their tiny positive losses. Per-anchor terms are
accumulated in ascending anchor index order for bit-identical results across
runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .batch import UNIT_ROW_TOL, EmbeddingBatch
from .errors import DegenerateInputError

RAW = "raw"
SCALED = "scaled"
NORMALIZED = "normalized"


@dataclass
class IceWeights:
    """Per-(anchor, other) weight tables.

    ``pos_weights[a, i]`` is the weight of positive i under anchor a and is
    zero when i is not a positive of a; ``neg_weights[a, j]`` likewise for
    negatives. ``stage`` is one of raw / scaled / normalized, ``scale`` the
    similarity scaling the weights were computed with.
    """

    pos_weights: np.ndarray
    neg_weights: np.ndarray
    stage: str
    scale: float


@dataclass
class IceGradients:
    """Per-row loss gradients, one row per embedding; mode is exact or reweighted."""

    grads: np.ndarray
    mode: str


@dataclass
class AnchorTerms:
    """One anchor's scaled softmax terms: index sets, weights, loss share."""

    anchor: int
    pos_indices: np.ndarray
    neg_indices: np.ndarray
    pos_weights: np.ndarray   # 1 - p(positive | anchor), one entry per positive
    neg_weights: np.ndarray   # sum over positives of p(negative | anchor, positive)
    loss: float


def _check_scale(scale: float) -> float:
    s = float(scale)
    if not np.isfinite(s) or s < 1.0:
        raise ValueError(f"scale must be a finite value >= 1, got {scale!r}")
    return s


def similarity_matrix(batch: EmbeddingBatch) -> np.ndarray:
    """All pairwise dot products of the batch rows.

    Rows are unit vectors, so entries are cosine similarities: the matrix is
    symmetric with unit diagonal and entries in [-1, 1] up to roundoff.
    """
    emb = batch.embeddings
    norms = np.linalg.norm(emb, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_ROW_TOL):
        bad = int(np.argmax(np.abs(norms - 1.0)))
        raise ValueError(f"row {bad} is not unit norm ({norms[bad]!r})")
    return emb @ emb.T


def anchor_terms(similarities: np.ndarray, labels: np.ndarray, anchor: int, scale: float) -> AnchorTerms:
    """Weights and loss contribution of a single anchor at the given scale.

    For positive i: weight = 1 - p(i | anchor) where p is the softmax of the
    scaled similarity of i against the anchor's negative set. For negative j:
    weight = sum over positives i of p(j | anchor, i). The loss share is
    sum_i -log p(i | anchor).
    """
    scale = _check_scale(scale)
    labels = np.asarray(labels)
    same = labels == labels[anchor]
    pos = np.flatnonzero(same)
    pos = pos[pos != anchor]
    neg = np.flatnonzero(~same)
    if pos.size == 0:
        raise ValueError(f"anchor {anchor} has no positives in the batch")
    if neg.size == 0:
        raise ValueError(f"anchor {anchor} has no negatives in the batch")

    z = scale * np.asarray(similarities[anchor], dtype=np.float64)
    lse_neg = np.logaddexp.reduce(z[neg])
    # -log p(i|a) = softplus(lse_neg - z_i), computed against the zero pivot so
    # a near-one probability keeps its tiny positive loss instead of being
    # swallowed by the ulp of a large z_i.
    diff = lse_neg - z[pos]
    terms = np.logaddexp(0.0, diff)
    loss = float(np.sum(terms))
    # 1 - p(i|a) = neg-mass / denominator; this form avoids cancellation.
    pos_weights = np.exp(diff - terms)
    # log denominators, one per positive: log(exp(z_i) + sum_neg exp(z_j))
    log_denom = z[pos] + terms
    neg_weights = np.exp(z[neg][None, :] - log_denom[:, None]).sum(axis=0)
    return AnchorTerms(anchor, pos, neg, pos_weights, neg_weights, loss)


def match_prob_pos(similarities: np.ndarray, labels, anchor: int, positive: int, scale: float) -> float:
    """Probability of the anchor matching one given positive against all its negatives."""
    scale = _check_scale(scale)
    labels = np.asarray(labels)
    if positive == anchor or labels[positive] != labels[anchor]:
        raise ValueError(f"index {positive} is not a positive of anchor {anchor}")
    neg = np.flatnonzero(labels != labels[anchor])
    if neg.size == 0:
        raise ValueError(f"anchor {anchor} has no negatives in the batch")
    z = scale * np.asarray(similarities[anchor], dtype=np.float64)
    lse_neg = np.logaddexp.reduce(z[neg])
    return float(np.exp(-np.logaddexp(0.0, lse_neg - z[positive])))


def match_prob_neg(similarities: np.ndarray, labels, anchor: int, positive: int, negative: int, scale: float) -> float:
    """Probability of one negative matching the anchor, in the distribution owned by the given positive."""
    scale = _check_scale(scale)
    labels = np.asarray(labels)
    if positive == anchor or labels[positive] != labels[anchor]:
        raise ValueError(f"index {positive} is not a positive of anchor {anchor}")
    if labels[negative] == labels[anchor]:
        raise ValueError(f"index {negative} is not a negative of anchor {anchor}")
    neg = np.flatnonzero(labels != labels[anchor])
    z = scale * np.asarray(similarities[anchor], dtype=np.float64)
    lse_neg = np.logaddexp.reduce(z[neg])
    log_denom = z[positive] + np.logaddexp(0.0, lse_neg - z[positive])
    return float(np.exp(z[negative] - log_denom))


def ice_loss(batch: EmbeddingBatch, scale: float) -> float:
    """Summed negative log matching probability over every (anchor, positive) pair.

    Trusts the batch's own validation; similarities are recomputed internally
    so the function stays smooth under the perturbed inputs used by
    finite-difference checks.
    """
    scale = _check_scale(scale)
    sims = batch.embeddings @ batch.embeddings.T
    total = 0.0
    for a in range(batch.size):
        total += anchor_terms(sims, batch.labels, a, scale).loss
    if not np.isfinite(total):
        raise DegenerateInputError(f"loss is not finite: {total!r}")
    return total


def scaled_weights(similarities: np.ndarray, labels, scale: float) -> IceWeights:
    """Per-pair gradient magnitudes with similarities multiplied by the scale."""
    scale = _check_scale(scale)
    labels = np.asarray(labels)
    n = labels.shape[0]
    pos_w = np.zeros((n, n))
    neg_w = np.zeros((n, n))
    for a in range(n):
        terms = anchor_terms(similarities, labels, a, scale)
        pos_w[a, terms.pos_indices] = terms.pos_weights
        neg_w[a, terms.neg_indices] = terms.neg_weights
    return IceWeights(pos_w, neg_w, SCALED, scale)


def raw_weights(similarities: np.ndarray, labels) -> IceWeights:
    """Unscaled gradient magnitudes (the scaled weights at scale 1)."""
    w = scaled_weights(similarities, labels, 1.0)
    return IceWeights(w.pos_weights, w.neg_weights, RAW, 1.0)


def normalized_weights(weights: IceWeights, batch_size: int) -> IceWeights:
    """Per-anchor normalization so positive and negative sets contribute equally.

    Each anchor's positive weights are divided by their own sum and each
    anchor's negative weights by that same sum (the two set totals coincide
    because the distributions share denominators); the factor 1/(2N) then
    makes every anchor's positive set and negative set each sum to 1/(2N).
    """
    if weights.stage != SCALED:
        raise ValueError(f"can only normalize scaled weights, got stage {weights.stage!r}")
    n = int(batch_size)
    if n != weights.pos_weights.shape[0]:
        raise ValueError(
            f"batch size {n} does not match weight tables of size {weights.pos_weights.shape[0]}"
        )
    pos_sums = weights.pos_weights.sum(axis=1)
    if np.any(pos_sums <= 0.0) or not np.all(np.isfinite(pos_sums)):
        bad = int(np.argmin(pos_sums))
        raise DegenerateInputError(
            f"anchor {bad} has accumulated positive weight {pos_sums[bad]!r}, cannot normalize"
        )
    # Dividing by the per-anchor sum first keeps the two-samples-per-class
    # case exact: a single positive yields w/w == 1.0 before the 1/(2N).
    denom = float(2 * n)
    pos = weights.pos_weights / pos_sums[:, None] / denom
    neg = weights.neg_weights / pos_sums[:, None] / denom
    return IceWeights(pos, neg, NORMALIZED, weights.scale)


def ice_gradients_exact(batch: EmbeddingBatch, scale: float) -> IceGradients:
    """True gradient of ice_loss with respect to every embedding row.

    Each row accumulates all three of its roles: as a positive of other
    anchors, as a negative of other anchors, and as an anchor itself (the
    product-rule mirror of its positives' and negatives' terms).
    """
    scale = _check_scale(scale)
    emb = batch.embeddings
    sims = emb @ emb.T
    grads = np.zeros_like(emb)
    for a in range(batch.size):
        t = anchor_terms(sims, batch.labels, a, scale)
        grads[t.pos_indices] += -scale * t.pos_weights[:, None] * emb[a]
        grads[t.neg_indices] += scale * t.neg_weights[:, None] * emb[a]
        grads[a] += -scale * (t.pos_weights @ emb[t.pos_indices]) + scale * (
            t.neg_weights @ emb[t.neg_indices]
        )
    return IceGradients(grads, "exact")


def ice_gradients_reweighted(batch: EmbeddingBatch, scale: float, anchor_grad: bool = True) -> IceGradients:
    """Gradient with magnitudes replaced by the per-anchor normalized weights.

    For each anchor a, positive i receives -normalized_weight * f_a and
    negative j receives +normalized_weight * f_a: directions match the exact
    gradient, magnitudes are the normalized weights. This is not the exact
    gradient of any scalar, so it is verified by its algebraic structure, not
    finite differences. With ``anchor_grad`` the anchor row also accumulates
    the mirrored terms -sum_i w*f_i + sum_j w*f_j with the same normalized
    magnitudes; turning it off updates only non-anchor roles.
    """
    scale = _check_scale(scale)
    emb = batch.embeddings
    sims = emb @ emb.T
    w = normalized_weights(scaled_weights(sims, batch.labels, scale), batch.size)
    grads = np.zeros_like(emb)
    for a in range(batch.size):
        pos = batch.positives(a)
        neg = batch.negatives(a)
        wp = w.pos_weights[a, pos]
        wn = w.neg_weights[a, neg]
        grads[pos] += -wp[:, None] * emb[a]
        grads[neg] += wn[:, None] * emb[a]
        if anchor_grad:
            grads[a] += -(wp @ emb[pos]) + (wn @ emb[neg])
    return IceGradients(grads, "reweighted")
