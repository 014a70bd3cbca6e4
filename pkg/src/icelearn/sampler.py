"""Class-balanced mini-batch sampling: C classes times N_c samples per class.

Sampling is pure given an explicit numpy Generator (PCG64: named, seedable,
and portable), so callers own the state threading and batches reproduce
exactly for a fixed seed. There is no global RNG.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import as_matrix


@dataclass
class LabeledDataset:
    """Feature vectors with contiguous integer class labels."""

    features: np.ndarray
    labels: np.ndarray
    class_index: dict[int, np.ndarray] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        feats = as_matrix(self.features).copy()
        lab = np.asarray(self.labels)
        if lab.ndim != 1 or lab.shape[0] != feats.shape[0]:
            raise ValueError(f"labels shape {lab.shape} does not match {feats.shape[0]} rows")
        lab = lab.astype(np.int64)
        present = np.unique(lab)
        if present.size < 1 or present[0] != 0 or present[-1] != present.size - 1:
            raise ValueError(f"labels must be contiguous from 0, got {present.tolist()}")
        feats.setflags(write=False)
        lab.setflags(write=False)
        self.features = feats
        self.labels = lab
        self.class_index = {int(c): np.flatnonzero(lab == c) for c in present}

    @property
    def size(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def num_classes(self) -> int:
        return len(self.class_index)


@dataclass(frozen=True)
class BatchSpec:
    """Batch layout: classes per batch, samples per class, and the sampler seed."""

    classes_per_batch: int
    samples_per_class: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.classes_per_batch < 2:
            raise ValueError(f"need at least 2 classes per batch, got {self.classes_per_batch}")
        if self.samples_per_class < 2:
            raise ValueError(f"need at least 2 samples per class, got {self.samples_per_class}")

    @property
    def batch_size(self) -> int:
        return self.classes_per_batch * self.samples_per_class

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(np.random.PCG64(self.seed))


def sample_batch(
    dataset: LabeledDataset, spec: BatchSpec, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Draw C distinct classes uniformly, then N_c members of each.

    Members are drawn without replacement when the class is large enough,
    otherwise with replacement (small classes stay usable; duplicate rows are
    legal batch inputs). Returns dataset row indices and labels remapped to
    0..C-1 in drawn-class order.
    """
    if spec.classes_per_batch > dataset.num_classes:
        raise ValueError(
            f"cannot draw {spec.classes_per_batch} classes from {dataset.num_classes}"
        )
    classes = rng.choice(dataset.num_classes, size=spec.classes_per_batch, replace=False)
    indices = np.empty(spec.batch_size, dtype=np.int64)
    relabeled = np.empty(spec.batch_size, dtype=np.int64)
    for new_label, cls in enumerate(classes):
        members = dataset.class_index[int(cls)]
        replace = members.size < spec.samples_per_class
        take = rng.choice(members, size=spec.samples_per_class, replace=replace)
        lo = new_label * spec.samples_per_class
        indices[lo : lo + spec.samples_per_class] = take
        relabeled[lo : lo + spec.samples_per_class] = new_label
    return indices, relabeled
