"""Mini-batch container for unit-norm embeddings with class labels."""

from __future__ import annotations

from dataclasses import InitVar, dataclass, field

import numpy as np

from .linalg import as_matrix

# Tolerance on the unit-norm row invariant.
UNIT_ROW_TOL = 1e-9


@dataclass
class EmbeddingBatch:
    """N unit-norm d-dimensional embeddings with contiguous class labels.

    Invariants (checked unless ``validate=False``): every row has unit L2 norm
    within 1e-9, labels are exactly {0..C-1}, and every class has at least two
    members so each anchor has at least one positive. Arrays are stored
    read-only; the batch is safe to share across threads.

    ``validate=False`` exists solely for finite-difference gradient checking,
    where rows are perturbed off the unit sphere on purpose.
    """

    embeddings: np.ndarray
    labels: np.ndarray
    validate: InitVar[bool] = True
    class_index: dict[int, np.ndarray] = field(init=False, repr=False)

    def __post_init__(self, validate: bool) -> None:
        emb = as_matrix(self.embeddings).copy()
        lab = np.asarray(self.labels)
        if lab.ndim != 1 or lab.shape[0] != emb.shape[0]:
            raise ValueError(f"labels shape {lab.shape} does not match {emb.shape[0]} rows")
        if not np.issubdtype(lab.dtype, np.integer):
            if not np.all(lab == np.floor(lab)):
                raise ValueError("labels must be integers")
        lab = lab.astype(np.int64)

        if validate:
            norms = np.linalg.norm(emb, axis=1)
            if np.any(np.abs(norms - 1.0) > UNIT_ROW_TOL):
                bad = int(np.argmax(np.abs(norms - 1.0)))
                raise ValueError(f"row {bad} has norm {norms[bad]!r}, expected unit rows")
            present = np.unique(lab)
            if present.size < 1 or present[0] != 0 or present[-1] != present.size - 1:
                raise ValueError(f"labels must be contiguous from 0, got {present.tolist()}")
            counts = np.bincount(lab)
            if np.any(counts < 2):
                thin = int(np.argmin(counts))
                raise ValueError(f"class {thin} has {counts[thin]} member(s), need at least 2")

        emb.setflags(write=False)
        lab.setflags(write=False)
        self.embeddings = emb
        self.labels = lab
        self.class_index = {
            int(c): np.flatnonzero(lab == c) for c in np.unique(lab)
        }

    @property
    def size(self) -> int:
        return self.embeddings.shape[0]

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    @property
    def num_classes(self) -> int:
        return len(self.class_index)

    def positives(self, anchor: int) -> np.ndarray:
        """Row indices sharing the anchor's class, excluding the anchor itself."""
        members = self.class_index[int(self.labels[anchor])]
        return members[members != anchor]

    def negatives(self, anchor: int) -> np.ndarray:
        """Row indices with a different class than the anchor."""
        return np.flatnonzero(self.labels != self.labels[anchor])
