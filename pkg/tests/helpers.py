"""Shared test utilities: an independent central-difference oracle and
random batch builders. Kept separate from the package's own gradient
checker so the two sides of every comparison stay independent."""

import numpy as np


def central_diff(f, x, h=1e-5):
    """Central-difference gradient of scalar f at flat vector x."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    for t in range(x.size):
        up = x.copy()
        down = x.copy()
        up[t] += h
        down[t] -= h
        g[t] = (f(up) - f(down)) / (2.0 * h)
    return g


def rel_err(a, b):
    """Max absolute difference relative to the larger magnitude."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-12)
    return float(np.max(np.abs(a - b)) / scale)


def unit_rows(rng, n, d):
    rows = rng.normal(size=(n, d))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def random_labeled_rows(rng, num_classes, per_class, d):
    rows = unit_rows(rng, num_classes * per_class, d)
    labels = np.repeat(np.arange(num_classes), per_class)
    return rows, labels


def brute_force_recall(embeddings, labels, k_values):
    """Independent O(N^2) retrieval reference: python loops, sort by (-sim, index)."""
    n = len(labels)
    out = []
    for k in sorted(k_values):
        hits = 0
        for q in range(n):
            scored = [
                (float(np.dot(embeddings[q], embeddings[j])), j) for j in range(n) if j != q
            ]
            scored.sort(key=lambda t: (-t[0], t[1]))
            if any(labels[j] == labels[q] for _, j in scored[:k]):
                hits += 1
        out.append(hits / n)
    return out
