"""Runner operations behind the service endpoints and the CLI modes:
data generation, training, gradient checking, evaluation, and scale sweeps.

Everything is deterministic: a (config, seed) pair fully determines every
output byte. Seed layout: the training split uses ``seed``, the held-out
split ``seed + 1``, the fixed loss-probe batch ``seed + 2``; network
initialization and batch sampling both derive from ``seed``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .batch import EmbeddingBatch
from .config import RunConfig
from .data import generate_clusters, read_dataset_csv, write_dataset_csv
from .errors import ConfigError, NumericError
from .gradcheck import (
    TOLERANCE,
    GradCheckReport,
    check_cce_gradients,
    check_ice_embedding_gradients,
    check_pipeline_gradients,
)
from .ice import ice_gradients_exact, ice_gradients_reweighted, ice_loss
from .mlp import (
    MlpEmbedder,
    SgdState,
    backward,
    forward,
    load_checkpoint,
    save_checkpoint,
    sgd_step,
)
from .retrieval import RetrievalReport, recall_at_k
from .sampler import BatchSpec, LabeledDataset, sample_batch


@dataclass
class MetricRow:
    iteration: int
    loss: float
    recall_at_1: float


@dataclass
class GenDataResult:
    path: Path
    rows: int
    num_classes: int
    input_dim: int


@dataclass
class TrainResult:
    iterations: int
    metrics: list[MetricRow]
    metrics_path: Path
    checkpoint_manifest: Path
    checkpoint_params: Path

    @property
    def final_loss(self) -> float:
        return self.metrics[-1].loss

    @property
    def final_recall_at_1(self) -> float:
        return self.metrics[-1].recall_at_1


@dataclass
class GradCheckResult:
    reports: list[GradCheckReport]
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(r.max_rel_error <= self.tolerance for r in self.reports)


@dataclass
class EvalResult:
    report: RetrievalReport
    path: Path | None


@dataclass
class SweepRow:
    scale: float
    recall_at_1: float
    recall_at_2: float
    final_loss: float


@dataclass
class SweepResult:
    rows: list[SweepRow]
    path: Path


def _require_out(config: RunConfig) -> Path:
    if not config.out:
        raise ConfigError("this mode requires an output directory (--out)")
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def training_dataset(config: RunConfig) -> LabeledDataset:
    if config.data:
        return read_dataset_csv(config.data)
    return generate_clusters(
        config.num_classes, config.per_class, config.input_dim, config.cluster_std, config.seed
    )


def heldout_dataset(config: RunConfig) -> LabeledDataset:
    """Evaluation split from the same cluster spec at seed+1.

    With ``disjoint_classes`` the evaluation classes get fresh cluster
    centers, so train and test classes are disjoint."""
    if config.eval_data:
        return read_dataset_csv(config.eval_data)
    offset = config.num_classes if config.disjoint_classes else 0
    return generate_clusters(
        config.num_classes,
        config.per_class,
        config.input_dim,
        config.cluster_std,
        config.seed + 1,
        class_offset=offset,
    )


def run_gen_data(config: RunConfig) -> GenDataResult:
    out = _require_out(config)
    ds = generate_clusters(
        config.num_classes, config.per_class, config.input_dim, config.cluster_std, config.seed
    )
    path = write_dataset_csv(ds, out / "dataset.csv")
    return GenDataResult(path, ds.size, ds.num_classes, ds.dim)


def train_model(
    config: RunConfig, train_ds: LabeledDataset, eval_ds: LabeledDataset
) -> tuple[MlpEmbedder, list[MetricRow]]:
    """Run the sampling / forward / loss / gradient / update loop.

    The logged loss is the scaled instance loss of one fixed probe batch so
    consecutive log rows are comparable; recall@1 is measured on the held-out
    split. Iteration 0 is logged before any update, then every
    ``logging_interval`` iterations, and always at the final iteration.
    """
    net = MlpEmbedder.initialize(
        train_ds.dim, config.hidden_dim, config.embed_dim, seed=config.seed
    )
    state = SgdState(config.lr, config.momentum, config.weight_decay)
    spec = BatchSpec(config.classes_per_batch, config.samples_per_class, config.seed)
    train_rng = spec.rng()
    probe_idx, probe_labels = sample_batch(
        train_ds, spec, np.random.default_rng(np.random.PCG64(config.seed + 2))
    )

    def evaluate(iteration: int) -> MetricRow:
        probe_emb, _ = forward(net, train_ds.features[probe_idx])
        loss = ice_loss(EmbeddingBatch(probe_emb, probe_labels), config.scale_s)
        if not np.isfinite(loss) or loss <= 0.0:
            raise NumericError(f"probe loss is not finite and positive: {loss!r}")
        eval_emb, _ = forward(net, eval_ds.features)
        r1 = recall_at_k(eval_emb, eval_ds.labels, [1]).recall_at_k[0]
        return MetricRow(iteration, loss, r1)

    every = config.logging_interval()
    metrics = [evaluate(0)]
    for it in range(1, config.iters + 1):
        idx, labels = sample_batch(train_ds, spec, train_rng)
        emb, cache = forward(net, train_ds.features[idx])
        batch = EmbeddingBatch(emb, labels)
        if config.grad_mode == "exact":
            emb_grads = ice_gradients_exact(batch, config.scale_s)
        else:
            emb_grads = ice_gradients_reweighted(batch, config.scale_s, config.anchor_grad)
        param_grads = backward(net, cache, emb_grads.grads)
        sgd_step(net, param_grads, state)
        if it % every == 0 or it == config.iters:
            metrics.append(evaluate(it))
    return net, metrics


def _metrics_csv(metrics: list[MetricRow]) -> str:
    lines = ["iter,loss,recall_at_1"]
    for row in metrics:
        lines.append(f"{row.iteration},{row.loss:.17g},{row.recall_at_1:.6f}")
    return "\n".join(lines) + "\n"


def _checkpoint_metadata(config: RunConfig, iterations: int) -> dict:
    return {
        "seed": config.seed,
        "iterations": iterations,
        "learning_rate": repr(config.lr),
        "momentum": repr(config.momentum),
        "weight_decay": repr(config.weight_decay),
        "scale_s": repr(config.scale_s),
        "grad_mode": config.grad_mode,
        "anchor_grad": "on" if config.anchor_grad else "off",
    }


def run_train(config: RunConfig) -> TrainResult:
    out = _require_out(config)
    train_ds = training_dataset(config)
    eval_ds = heldout_dataset(config)
    net, metrics = train_model(config, train_ds, eval_ds)
    metrics_path = out / "metrics.csv"
    metrics_path.write_text(_metrics_csv(metrics), encoding="utf-8")
    manifest, params = save_checkpoint(
        net, out / "checkpoint.txt", _checkpoint_metadata(config, config.iters)
    )
    return TrainResult(config.iters, metrics, metrics_path, manifest, params)


def run_grad_check(config: RunConfig) -> GradCheckResult:
    reports = [
        check_ice_embedding_gradients(
            config.seed,
            num_classes=config.classes_per_batch,
            per_class=config.samples_per_class,
            dim=config.embed_dim,
            corrupt=config.corrupt,
        ),
        check_pipeline_gradients(config.seed, corrupt=config.corrupt),
        check_cce_gradients(config.seed, corrupt=config.corrupt),
    ]
    return GradCheckResult(reports, TOLERANCE)


def run_eval(config: RunConfig) -> EvalResult:
    if not config.checkpoint:
        raise ConfigError("eval mode requires --checkpoint")
    if not config.data:
        raise ConfigError("eval mode requires --data")
    net, _ = load_checkpoint(config.checkpoint)
    ds = read_dataset_csv(config.data)
    if ds.dim != net.in_dim:
        raise ValueError(
            f"dataset dim {ds.dim} does not match checkpoint input dim {net.in_dim}"
        )
    emb, _ = forward(net, ds.features)
    report = recall_at_k(emb, ds.labels, config.k_values)
    path = None
    if config.out:
        out = _require_out(config)
        path = out / "recall.csv"
        path.write_text(report.to_csv(), encoding="utf-8")
    return EvalResult(report, path)


def run_sweep(config: RunConfig) -> SweepResult:
    """Train one model per scale value with a shared seed; report recall and loss."""
    out = _require_out(config)
    train_ds = training_dataset(config)
    eval_ds = heldout_dataset(config)
    rows = []
    for s in config.s_list:
        sub = config.model_copy(update={"scale_s": float(s)})
        net, metrics = train_model(sub, train_ds, eval_ds)
        emb, _ = forward(net, eval_ds.features)
        report = recall_at_k(emb, eval_ds.labels, [1, 2])
        rows.append(
            SweepRow(float(s), report.recall_at_k[0], report.recall_at_k[1], metrics[-1].loss)
        )
    lines = ["s,recall_at_1,recall_at_2,final_loss"]
    for row in rows:
        lines.append(
            f"{row.scale:g},{row.recall_at_1:.6f},{row.recall_at_2:.6f},{row.final_loss:.17g}"
        )
    path = out / "sweep.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return SweepResult(rows, path)
