"""Request and response models for the HTTP service.

Training, sweeping, and gradient checking take a full RunConfig body; the
smaller operations get dedicated request models. Paths in requests are
resolved on the service host.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel

from ..config import RunConfig

__all__ = [
    "RunConfig",
    "GenDataRequest",
    "GenDataResponse",
    "TrainResponse",
    "MetricRowModel",
    "GradCheckResponse",
    "CheckRowModel",
    "EvalRequest",
    "EvalResponse",
    "SweepResponse",
    "SweepRowModel",
    "IceLossRequest",
    "IceLossResponse",
    "IceGradientsRequest",
    "IceGradientsResponse",
]


class GenDataRequest(BaseModel):
    num_classes: int = 10
    per_class: int = 40
    input_dim: int = 20
    cluster_std: float = 0.15
    seed: int = 7
    out: str


class GenDataResponse(BaseModel):
    path: str
    rows: int
    num_classes: int
    input_dim: int


class MetricRowModel(BaseModel):
    iteration: int
    loss: float
    recall_at_1: float


class TrainResponse(BaseModel):
    iterations: int
    final_loss: float
    final_recall_at_1: float
    metrics: list[MetricRowModel]
    metrics_path: str
    checkpoint_manifest: str
    checkpoint_params: str


class CheckRowModel(BaseModel):
    name: str
    max_rel_error: float
    row_errors: Optional[list[float]] = None


class GradCheckResponse(BaseModel):
    tolerance: float
    passed: bool
    checks: list[CheckRowModel]


class EvalRequest(BaseModel):
    checkpoint: str
    data: str
    k_values: list[int] = [1, 2, 4, 8]
    out: Optional[str] = None


class EvalResponse(BaseModel):
    k_values: list[int]
    recall_at_k: list[float]
    num_queries: int
    path: Optional[str] = None


class SweepRowModel(BaseModel):
    s: float
    recall_at_1: float
    recall_at_2: float
    final_loss: float


class SweepResponse(BaseModel):
    rows: list[SweepRowModel]
    path: str


class IceLossRequest(BaseModel):
    embeddings: list[list[float]]
    labels: list[int]
    scale_s: float = 1.0


class IceLossResponse(BaseModel):
    loss: float
    batch_size: int
    num_classes: int


class IceGradientsRequest(IceLossRequest):
    grad_mode: Literal["exact", "reweighted"] = "exact"
    anchor_grad: bool = True


class IceGradientsResponse(BaseModel):
    gradients: list[list[float]]
    mode: str
