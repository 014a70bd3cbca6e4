"""Recall@K retrieval evaluation on unit-norm embeddings.

Every row serves as query against all other rows (leave-one-out); neighbors
rank by descending dot product with ties broken by ascending row index. A
query scores 1 at K if any of its top-K neighbors shares its label.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .batch import UNIT_ROW_TOL
from .linalg import as_matrix


@dataclass
class RetrievalReport:
    """Recall at each requested K, averaged over all queries."""

    k_values: list[int]
    recall_at_k: list[float]
    num_queries: int

    def to_csv(self) -> str:
        lines = ["k,recall"]
        for k, r in zip(self.k_values, self.recall_at_k):
            lines.append(f"{k},{r:.6f}")
        return "\n".join(lines) + "\n"


def recall_at_k(embeddings, labels, k_values) -> RetrievalReport:
    """Evaluate Recall@K for each K; K values are reported in ascending order."""
    emb = as_matrix(embeddings)
    lab = np.asarray(labels, dtype=np.int64)
    n = emb.shape[0]
    if lab.shape != (n,):
        raise ValueError(f"labels shape {lab.shape} does not match {n} rows")
    norms = np.linalg.norm(emb, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_ROW_TOL):
        bad = int(np.argmax(np.abs(norms - 1.0)))
        raise ValueError(f"row {bad} is not unit norm ({norms[bad]!r})")
    counts = np.bincount(lab)
    if np.any(counts[np.unique(lab)] < 2):
        lonely = int(np.unique(lab)[np.argmin(counts[np.unique(lab)])])
        raise ValueError(f"label {lonely} occurs once; its query can never score")
    ks = sorted(int(k) for k in k_values)
    if not ks:
        raise ValueError("need at least one K value")
    if ks[0] < 1:
        raise ValueError(f"K values must be >= 1, got {ks[0]}")
    if ks[-1] >= n:
        raise ValueError(f"K={ks[-1]} must be smaller than the {n} database rows")

    sims = emb @ emb.T
    hits = np.zeros(len(ks))
    for q in range(n):
        others = np.concatenate([np.arange(q), np.arange(q + 1, n)])
        scores = sims[q, others]
        # Primary key: descending score; tie key: ascending row index.
        order = np.lexsort((others, -scores))
        match = lab[others[order]] == lab[q]
        got = np.cumsum(match) > 0
        for t, k in enumerate(ks):
            hits[t] += got[k - 1]
    return RetrievalReport(ks, [float(h / n) for h in hits], n)
