"""Dense float64 vector/matrix helpers and the unit-normalization layer.

All arithmetic is 64-bit: the project's central verification tool is
finite-difference gradient checking, which is unreliable in 32-bit.
Backing storage is numpy; given identical inputs, repeated runs produce
bit-identical results.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateInputError

# Inputs with smaller norm are rejected rather than clamped: a zero vector
# has no direction, and angular similarity requires one.
NORM_EPS = 1e-12


def as_vector(values) -> np.ndarray:
    """Coerce to a finite 1-D float64 array."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector contains NaN or Inf")
    return v


def as_matrix(values) -> np.ndarray:
    """Coerce to a finite 2-D float64 array."""
    m = np.asarray(values, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains NaN or Inf")
    return m


def dot(a, b) -> float:
    """Dot product of two equal-dimension vectors."""
    va, vb = as_vector(a), as_vector(b)
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.shape[0]} vs {vb.shape[0]}")
    return float(np.dot(va, vb))


def l2_normalize_forward(vector) -> tuple[np.ndarray, float]:
    """Project a vector onto the unit sphere; returns (unit vector, original norm)."""
    v = as_vector(vector)
    norm = float(np.linalg.norm(v))
    if norm <= NORM_EPS:
        raise DegenerateInputError(f"cannot normalize vector with norm {norm!r}")
    return v / norm, norm


def l2_normalize_backward(vector, upstream) -> np.ndarray:
    """Pull an upstream gradient back through v -> v/||v||.

    Returns (upstream - (upstream . n) n) / ||v|| with n = v/||v||; the result
    is tangent to the sphere at n, so the radial component is annihilated.
    """
    v = as_vector(vector)
    u = as_vector(upstream)
    if v.shape != u.shape:
        raise ValueError(f"dimension mismatch: {v.shape[0]} vs {u.shape[0]}")
    unit, norm = l2_normalize_forward(v)
    return (u - np.dot(u, unit) * unit) / norm


def normalize_rows_forward(matrix) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise unit normalization; returns (unit rows, row norms)."""
    m = as_matrix(matrix)
    norms = np.linalg.norm(m, axis=1)
    if np.any(norms <= NORM_EPS):
        bad = int(np.argmin(norms))
        raise DegenerateInputError(f"row {bad} has norm {norms[bad]!r}, cannot normalize")
    return m / norms[:, None], norms


def normalize_rows_backward(unit_rows: np.ndarray, norms: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    """Row-wise backward pass of unit normalization, given the forward outputs."""
    if upstream.shape != unit_rows.shape:
        raise ValueError(f"shape mismatch: {upstream.shape} vs {unit_rows.shape}")
    radial = np.sum(upstream * unit_rows, axis=1, keepdims=True)
    return (upstream - radial * unit_rows) / norms[:, None]
