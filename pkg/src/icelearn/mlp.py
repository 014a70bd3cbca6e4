"""Two-layer embedding network with unit-norm output and analytic backward pass.

forward and backward are pure given the cache; sgd_step mutates the network
and must be owned by a single trainer thread. Checkpoints are a key-value
text manifest plus a flat little-endian float64 blob of the parameters in
declaration order (w1, b1, w2, b2); round-trips are bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .linalg import as_matrix, normalize_rows_backward, normalize_rows_forward

CHECKPOINT_FORMAT = "mlp-embedder-v1"


@dataclass
class MlpEmbedder:
    """input -> linear -> rectifier -> linear -> unit normalization."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self) -> None:
        self.w1 = np.asarray(self.w1, dtype=np.float64)
        self.b1 = np.asarray(self.b1, dtype=np.float64)
        self.w2 = np.asarray(self.w2, dtype=np.float64)
        self.b2 = np.asarray(self.b2, dtype=np.float64)
        if self.w1.ndim != 2 or self.w2.ndim != 2:
            raise ValueError("weight matrices must be 2-D")
        if self.b1.shape != (self.w1.shape[1],) or self.b2.shape != (self.w2.shape[1],):
            raise ValueError("bias shapes do not match weight matrices")
        if self.w1.shape[1] != self.w2.shape[0]:
            raise ValueError(
                f"hidden dims disagree: {self.w1.shape[1]} vs {self.w2.shape[0]}"
            )
        if self.embed_dim < 2:
            raise ValueError(f"embedding dim must be >= 2, got {self.embed_dim}")
        for p in (self.w1, self.b1, self.w2, self.b2):
            if not np.all(np.isfinite(p)):
                raise ValueError("parameters contain NaN or Inf")

    @property
    def in_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def embed_dim(self) -> int:
        return self.w2.shape[1]

    @classmethod
    def initialize(cls, in_dim: int, hidden_dim: int, embed_dim: int, seed: int) -> "MlpEmbedder":
        """Zero-mean Gaussian weights with std sqrt(2/fan_in); zero biases."""
        rng = np.random.default_rng(seed)
        w1 = rng.normal(0.0, np.sqrt(2.0 / in_dim), size=(in_dim, hidden_dim))
        w2 = rng.normal(0.0, np.sqrt(2.0 / hidden_dim), size=(hidden_dim, embed_dim))
        return cls(w1, np.zeros(hidden_dim), w2, np.zeros(embed_dim))

    def params_vector(self) -> np.ndarray:
        """All parameters flattened row-major in declaration order."""
        return np.concatenate(
            [self.w1.ravel(), self.b1.ravel(), self.w2.ravel(), self.b2.ravel()]
        )

    def set_params_vector(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        sizes = [self.w1.size, self.b1.size, self.w2.size, self.b2.size]
        if flat.shape != (sum(sizes),):
            raise ValueError(f"expected {sum(sizes)} parameters, got {flat.shape}")
        parts = np.split(flat, np.cumsum(sizes)[:-1])
        self.w1 = parts[0].reshape(self.w1.shape).copy()
        self.b1 = parts[1].copy()
        self.w2 = parts[2].reshape(self.w2.shape).copy()
        self.b2 = parts[3].copy()

    def copy(self) -> "MlpEmbedder":
        return MlpEmbedder(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy())


@dataclass
class ForwardCache:
    """Intermediate values needed by the backward pass."""

    inputs: np.ndarray
    pre_act: np.ndarray
    hidden: np.ndarray
    unit: np.ndarray
    norms: np.ndarray


@dataclass
class ParamGrads:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray


def forward(net: MlpEmbedder, inputs) -> tuple[np.ndarray, ForwardCache]:
    """Embed input rows; every output row is unit norm."""
    x = as_matrix(inputs)
    if x.shape[1] != net.in_dim:
        raise ValueError(f"input dim {x.shape[1]} does not match network dim {net.in_dim}")
    pre_act = x @ net.w1 + net.b1
    hidden = np.maximum(pre_act, 0.0)
    pre_norm = hidden @ net.w2 + net.b2
    unit, norms = normalize_rows_forward(pre_norm)
    return unit, ForwardCache(x, pre_act, hidden, unit, norms)


def backward(net: MlpEmbedder, cache: ForwardCache, embedding_grads) -> ParamGrads:
    """Exact chain-rule gradients of the parameters given gradients at the embeddings."""
    g = np.asarray(embedding_grads, dtype=np.float64)
    if g.shape != cache.unit.shape:
        raise ValueError(f"gradient shape {g.shape} does not match embeddings {cache.unit.shape}")
    g_pre_norm = normalize_rows_backward(cache.unit, cache.norms, g)
    gw2 = cache.hidden.T @ g_pre_norm
    gb2 = g_pre_norm.sum(axis=0)
    g_hidden = g_pre_norm @ net.w2.T
    # Rectifier subgradient at 0 is defined as 0.
    g_hidden = np.where(cache.pre_act > 0.0, g_hidden, 0.0)
    gw1 = cache.inputs.T @ g_hidden
    gb1 = g_hidden.sum(axis=0)
    return ParamGrads(gw1, gb1, gw2, gb2)


@dataclass
class SgdState:
    """SGD with momentum and weight decay; the last linear layer gets a larger rate."""

    learning_rate: float = 1e-3
    momentum: float = 0.8
    weight_decay: float = 1e-5
    last_layer_lr_multiplier: float = 10.0
    velocities: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError(f"learning rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ValueError(f"weight decay must be >= 0, got {self.weight_decay}")


def sgd_step(net: MlpEmbedder, grads: ParamGrads, state: SgdState) -> MlpEmbedder:
    """velocity <- momentum*velocity + grad + decay*param; param <- param - lr*velocity."""
    last_layer = ("w2", "b2")
    for name in ("w1", "b1", "w2", "b2"):
        param = getattr(net, name)
        grad = getattr(grads, name)
        if grad.shape != param.shape:
            raise ValueError(f"gradient shape {grad.shape} does not match {name} {param.shape}")
        vel = state.velocities.get(name)
        if vel is None:
            vel = np.zeros_like(param)
        vel = state.momentum * vel + grad + state.weight_decay * param
        state.velocities[name] = vel
        lr = state.learning_rate * (state.last_layer_lr_multiplier if name in last_layer else 1.0)
        setattr(net, name, param - lr * vel)
    return net


def save_checkpoint(net: MlpEmbedder, manifest_path, metadata: dict | None = None) -> tuple[Path, Path]:
    """Write the manifest text file and the parameter blob next to it."""
    manifest_path = Path(manifest_path)
    params_path = manifest_path.with_suffix(".bin")
    lines = [
        f"format = {CHECKPOINT_FORMAT}",
        f"in_dim = {net.in_dim}",
        f"hidden_dim = {net.hidden_dim}",
        f"embed_dim = {net.embed_dim}",
        f"params_file = {params_path.name}",
    ]
    for key in sorted(metadata or {}):
        lines.append(f"{key} = {metadata[key]}")
    manifest_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    params_path.write_bytes(net.params_vector().astype("<f8").tobytes())
    return manifest_path, params_path


def load_checkpoint(manifest_path) -> tuple[MlpEmbedder, dict[str, str]]:
    """Rebuild the network from a manifest and its parameter blob."""
    manifest_path = Path(manifest_path)
    entries: dict[str, str] = {}
    for line in manifest_path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        entries[key.strip()] = value.strip()
    if entries.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format {entries.get('format')!r}")
    in_dim = int(entries["in_dim"])
    hidden_dim = int(entries["hidden_dim"])
    embed_dim = int(entries["embed_dim"])
    blob = (manifest_path.parent / entries["params_file"]).read_bytes()
    flat = np.frombuffer(blob, dtype="<f8").astype(np.float64)
    net = MlpEmbedder(
        np.zeros((in_dim, hidden_dim)),
        np.zeros(hidden_dim),
        np.zeros((hidden_dim, embed_dim)),
        np.zeros(embed_dim),
    )
    net.set_params_vector(flat)
    return net, entries
