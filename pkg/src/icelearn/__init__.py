"""Instance cross entropy metric learning.

Core pieces: instance-level matching probabilities and loss with exact and
reweighted analytic gradients (``ice``), a categorical cross entropy baseline
(``cce``), a small trainable embedding network (``mlp``), class-balanced
batch sampling (``sampler``), Recall@K retrieval evaluation (``retrieval``),
and a deterministic training harness (``train``) exposed through a FastAPI
service (``service``) and a CLI (``cli``).
"""

from .batch import EmbeddingBatch
from .cce import ClassifierHead, cce_gradients, cce_loss
from .config import RunConfig
from .errors import ConfigError, DegenerateInputError, NumericError
from .ice import (
    IceGradients,
    IceWeights,
    anchor_terms,
    ice_gradients_exact,
    ice_gradients_reweighted,
    ice_loss,
    match_prob_neg,
    match_prob_pos,
    normalized_weights,
    raw_weights,
    scaled_weights,
    similarity_matrix,
)
from .linalg import dot, l2_normalize_backward, l2_normalize_forward
from .mlp import MlpEmbedder, SgdState, backward, forward, sgd_step
from .retrieval import RetrievalReport, recall_at_k
from .sampler import BatchSpec, LabeledDataset, sample_batch

__all__ = [
    "EmbeddingBatch",
    "ClassifierHead",
    "cce_gradients",
    "cce_loss",
    "RunConfig",
    "ConfigError",
    "DegenerateInputError",
    "NumericError",
    "IceGradients",
    "IceWeights",
    "anchor_terms",
    "ice_gradients_exact",
    "ice_gradients_reweighted",
    "ice_loss",
    "match_prob_neg",
    "match_prob_pos",
    "normalized_weights",
    "raw_weights",
    "scaled_weights",
    "similarity_matrix",
    "dot",
    "l2_normalize_backward",
    "l2_normalize_forward",
    "MlpEmbedder",
    "SgdState",
    "backward",
    "forward",
    "sgd_step",
    "RetrievalReport",
    "recall_at_k",
    "BatchSpec",
    "LabeledDataset",
    "sample_batch",
]

__version__ = "0.1.0"
