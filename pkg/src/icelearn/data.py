"""Synthetic Gaussian-cluster dataset generation and the dataset CSV format.

The file format is UTF-8 CSV with header ``label,f0,f1,...``: label is a
non-negative integer, features are decimal floats printed with 17 significant
digits so a write/read round-trip is exact for 64-bit floats.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .sampler import LabeledDataset


def generate_clusters(
    num_classes: int,
    per_class: int,
    input_dim: int,
    cluster_std: float,
    seed: int,
    class_offset: int = 0,
) -> LabeledDataset:
    """One isotropic Gaussian cluster per class at unit-spaced means.

    Class c's mean is a unit step along coordinate axis (c mod input_dim),
    pushed one unit further out each time the axes wrap, so centers stay unit
    spaced however many classes there are. ``class_offset`` shifts the center
    layout (not the labels), which yields fresh cluster positions for a
    disjoint evaluation split.
    """
    if num_classes < 1 or per_class < 1 or input_dim < 1:
        raise ValueError("num_classes, per_class and input_dim must be positive")
    if cluster_std < 0:
        raise ValueError(f"cluster std must be >= 0, got {cluster_std}")
    rng = np.random.default_rng(seed)
    blocks = []
    for c in range(num_classes):
        slot = c + class_offset
        mean = np.zeros(input_dim)
        mean[slot % input_dim] = 1.0 + slot // input_dim
        blocks.append(rng.normal(loc=mean, scale=cluster_std, size=(per_class, input_dim)))
    features = np.vstack(blocks)
    labels = np.repeat(np.arange(num_classes), per_class)
    return LabeledDataset(features, labels)


def write_dataset_csv(dataset: LabeledDataset, path) -> Path:
    path = Path(path)
    header = "label," + ",".join(f"f{t}" for t in range(dataset.dim))
    lines = [header]
    for row, label in zip(dataset.features, dataset.labels):
        lines.append(f"{label}," + ",".join(format(x, ".17g") for x in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_dataset_csv(path) -> LabeledDataset:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("label,"):
        raise ValueError(f"{path}: expected header starting with 'label,'")
    width = len(lines[0].split(","))
    labels = []
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != width:
            raise ValueError(f"{path}:{lineno}: expected {width} columns, got {len(parts)}")
        labels.append(int(parts[0]))
        rows.append([float(p) for p in parts[1:]])
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return LabeledDataset(np.array(rows, dtype=np.float64), np.array(labels, dtype=np.int64))
