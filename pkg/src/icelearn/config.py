"""Run configuration: one flat option space shared by the CLI, the config
file and the service request bodies.

Config files are plain ``key = value`` text, one option per line, with the
same names as the CLI flags (underscores instead of dashes). Command-line
flags override file values.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, field_validator

from .errors import ConfigError

_TRUE = {"on", "true", "1", "yes"}
_FALSE = {"off", "false", "0", "no"}


def _parse_bool(value):
    if isinstance(value, str):
        low = value.strip().lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"expected on/off, got {value!r}")
    return value


def _parse_number_list(value):
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    return value


class RunConfig(BaseModel):
    """Everything a run needs; defaults describe the desk-scale synthetic task."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    mode: Optional[
        Literal["gen-data", "train", "grad-check", "eval", "sweep-s", "serve"]
    ] = None
    data: Optional[str] = None
    eval_data: Optional[str] = None
    checkpoint: Optional[str] = None
    out: Optional[str] = None

    # Synthetic cluster spec (used when no dataset file is given).
    num_classes: int = 10
    per_class: int = 40
    input_dim: int = 20
    cluster_std: float = 0.15
    disjoint_classes: bool = False

    # Batch layout and loss.
    classes_per_batch: int = 5
    samples_per_class: int = 4
    scale_s: float = 16.0
    grad_mode: Literal["exact", "reweighted"] = "reweighted"
    anchor_grad: bool = True

    # Network and optimizer.
    hidden_dim: int = 32
    embed_dim: int = 8
    lr: float = 1e-3
    momentum: float = 0.8
    weight_decay: float = 1e-5
    iters: int = 2000
    eval_every: Optional[int] = None

    seed: int = 7
    k_values: list[int] = [1, 2, 4, 8]
    s_list: list[float] = [1.0, 4.0, 16.0, 64.0]

    # Negative-control hook for the gradient checker.
    corrupt: bool = False

    # Service binding (serve mode only).
    host: str = "127.0.0.1"
    port: int = 8321

    @field_validator("anchor_grad", "disjoint_classes", "corrupt", mode="before")
    @classmethod
    def _bools(cls, v):
        return _parse_bool(v)

    @field_validator("k_values", "s_list", mode="before")
    @classmethod
    def _lists(cls, v):
        return _parse_number_list(v)

    @field_validator("scale_s")
    @classmethod
    def _scale(cls, v):
        if v < 1.0:
            raise ValueError(f"scale must be >= 1, got {v}")
        return v

    @field_validator("s_list")
    @classmethod
    def _s_list(cls, v):
        for s in v:
            if s < 1.0:
                raise ValueError(f"every sweep scale must be >= 1, got {s}")
        return v

    @field_validator("k_values")
    @classmethod
    def _k_values(cls, v):
        for k in v:
            if k < 1:
                raise ValueError(f"every K must be >= 1, got {k}")
        return v

    @field_validator("classes_per_batch")
    @classmethod
    def _cpb(cls, v):
        if v < 2:
            raise ValueError(f"classes per batch must be >= 2, got {v}")
        return v

    @field_validator("samples_per_class")
    @classmethod
    def _spc(cls, v):
        if v < 2:
            raise ValueError(f"samples per class must be >= 2, got {v}")
        return v

    @field_validator("lr")
    @classmethod
    def _lr(cls, v):
        if v <= 0:
            raise ValueError(f"learning rate must be positive, got {v}")
        return v

    @field_validator("momentum")
    @classmethod
    def _momentum(cls, v):
        if not 0.0 <= v < 1.0:
            raise ValueError(f"momentum must lie in [0, 1), got {v}")
        return v

    @field_validator("weight_decay", "cluster_std")
    @classmethod
    def _nonneg(cls, v):
        if v < 0:
            raise ValueError(f"value must be >= 0, got {v}")
        return v

    @field_validator("num_classes", "per_class", "input_dim", "hidden_dim", "port")
    @classmethod
    def _positive(cls, v):
        if v < 1:
            raise ValueError(f"value must be >= 1, got {v}")
        return v

    @field_validator("embed_dim")
    @classmethod
    def _embed(cls, v):
        if v < 2:
            raise ValueError(f"embedding dim must be >= 2, got {v}")
        return v

    @field_validator("iters")
    @classmethod
    def _iters(cls, v):
        if v < 0:
            raise ValueError(f"iterations must be >= 0, got {v}")
        return v

    @field_validator("eval_every")
    @classmethod
    def _eval_every(cls, v):
        if v is not None and v < 1:
            raise ValueError(f"eval cadence must be >= 1, got {v}")
        return v

    def logging_interval(self) -> int:
        return self.eval_every if self.eval_every is not None else max(self.iters // 20, 1)


def parse_config_file(path) -> dict[str, str]:
    """Read ``key = value`` lines; blank lines and # comments are ignored."""
    path = Path(path)
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Merge config-file values with flag overrides (flags win) into a RunConfig."""
    merged: dict = {}
    merged.update(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return RunConfig(**merged)
    except Exception as exc:  # pydantic.ValidationError and friends
        raise ConfigError(str(exc)) from exc
