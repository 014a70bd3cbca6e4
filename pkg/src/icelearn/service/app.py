"""FastAPI service exposing the package's operations as synchronous endpoints.

Error mapping: invalid values and configuration yield 400, numeric failures
(NaN, degenerate inputs) 422, and I/O problems 500.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..batch import EmbeddingBatch
from ..config import RunConfig
from ..errors import ConfigError, NumericError
from ..ice import ice_gradients_exact, ice_gradients_reweighted, ice_loss
from ..train import run_eval, run_gen_data, run_grad_check, run_sweep, run_train
from .schemas import (
    CheckRowModel,
    EvalRequest,
    EvalResponse,
    GenDataRequest,
    GenDataResponse,
    GradCheckResponse,
    IceGradientsRequest,
    IceLossRequest,
    IceLossResponse,
    IceGradientsResponse,
    MetricRowModel,
    SweepResponse,
    SweepRowModel,
    TrainResponse,
)

app = FastAPI(
    title="icelearn",
    description="Instance cross entropy metric learning: training, evaluation, and loss computation.",
)


@app.exception_handler(ConfigError)
@app.exception_handler(ValueError)
async def _bad_request(request: Request, exc: Exception) -> JSONResponse:
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.exception_handler(NumericError)
async def _numeric_failure(request: Request, exc: Exception) -> JSONResponse:
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.exception_handler(OSError)
async def _io_failure(request: Request, exc: Exception) -> JSONResponse:
    return JSONResponse(status_code=500, content={"detail": str(exc)})


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/data/generate", response_model=GenDataResponse)
def generate_data(req: GenDataRequest) -> GenDataResponse:
    config = RunConfig(
        mode="gen-data",
        num_classes=req.num_classes,
        per_class=req.per_class,
        input_dim=req.input_dim,
        cluster_std=req.cluster_std,
        seed=req.seed,
        out=req.out,
    )
    result = run_gen_data(config)
    return GenDataResponse(
        path=str(result.path),
        rows=result.rows,
        num_classes=result.num_classes,
        input_dim=result.input_dim,
    )


@app.post("/train", response_model=TrainResponse)
def train(config: RunConfig) -> TrainResponse:
    result = run_train(config)
    return TrainResponse(
        iterations=result.iterations,
        final_loss=result.final_loss,
        final_recall_at_1=result.final_recall_at_1,
        metrics=[
            MetricRowModel(iteration=m.iteration, loss=m.loss, recall_at_1=m.recall_at_1)
            for m in result.metrics
        ],
        metrics_path=str(result.metrics_path),
        checkpoint_manifest=str(result.checkpoint_manifest),
        checkpoint_params=str(result.checkpoint_params),
    )


@app.post("/grad-check", response_model=GradCheckResponse)
def grad_check(config: RunConfig) -> GradCheckResponse:
    result = run_grad_check(config)
    return GradCheckResponse(
        tolerance=result.tolerance,
        passed=result.passed,
        checks=[
            CheckRowModel(name=r.name, max_rel_error=r.max_rel_error, row_errors=r.row_errors)
            for r in result.reports
        ],
    )


@app.post("/eval", response_model=EvalResponse)
def evaluate(req: EvalRequest) -> EvalResponse:
    config = RunConfig(
        mode="eval", checkpoint=req.checkpoint, data=req.data, k_values=req.k_values, out=req.out
    )
    result = run_eval(config)
    return EvalResponse(
        k_values=result.report.k_values,
        recall_at_k=result.report.recall_at_k,
        num_queries=result.report.num_queries,
        path=str(result.path) if result.path else None,
    )


@app.post("/sweep", response_model=SweepResponse)
def sweep(config: RunConfig) -> SweepResponse:
    result = run_sweep(config)
    return SweepResponse(
        rows=[
            SweepRowModel(
                s=r.scale,
                recall_at_1=r.recall_at_1,
                recall_at_2=r.recall_at_2,
                final_loss=r.final_loss,
            )
            for r in result.rows
        ],
        path=str(result.path),
    )


@app.post("/ice/loss", response_model=IceLossResponse)
def compute_loss(req: IceLossRequest) -> IceLossResponse:
    batch = EmbeddingBatch(req.embeddings, req.labels)
    return IceLossResponse(
        loss=ice_loss(batch, req.scale_s),
        batch_size=batch.size,
        num_classes=batch.num_classes,
    )


@app.post("/ice/gradients", response_model=IceGradientsResponse)
def compute_gradients(req: IceGradientsRequest) -> IceGradientsResponse:
    batch = EmbeddingBatch(req.embeddings, req.labels)
    if req.grad_mode == "exact":
        result = ice_gradients_exact(batch, req.scale_s)
    else:
        result = ice_gradients_reweighted(batch, req.scale_s, req.anchor_grad)
    return IceGradientsResponse(gradients=result.grads.tolist(), mode=result.mode)
