"""Deterministic numerics: activations, dense products, seeded RNG, init schemes.

All arrays are float64. The RNG is numpy's PCG64, a fixed counter-based
generator whose stream depends only on the seed, so every run on every
platform sees identical draws.
"""

import numpy as np

FLOAT = np.float64


def new_rng(seed: int) -> np.random.Generator:
    """Seeded generator with a platform-independent stream."""
    return np.random.Generator(np.random.PCG64(seed))


def sigmoid(x):
    """Elementwise logistic function, stable for |x| up to ~1e3.

    Computed as 0.5*(1 + tanh(x/2)): saturates cleanly instead of
    overflowing, and satisfies sigmoid(x)+sigmoid(-x) == 1 exactly.
    """
    x = np.asarray(x, dtype=FLOAT)
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def tanh(x):
    """Elementwise hyperbolic tangent."""
    return np.tanh(np.asarray(x, dtype=FLOAT))


def matvec(m, v):
    """Matrix-vector product with an explicit dimension check."""
    m = np.asarray(m, dtype=FLOAT)
    v = np.asarray(v, dtype=FLOAT)
    if m.ndim != 2 or v.ndim != 1 or m.shape[1] != v.shape[0]:
        raise ValueError(f"matvec shape mismatch: {m.shape} @ {v.shape}")
    return m @ v


def hadamard(a, b):
    """Elementwise product of two equal-length vectors."""
    a = np.asarray(a, dtype=FLOAT)
    b = np.asarray(b, dtype=FLOAT)
    if a.shape != b.shape:
        raise ValueError(f"hadamard shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def add(a, b):
    """Elementwise sum of two equal-length vectors."""
    a = np.asarray(a, dtype=FLOAT)
    b = np.asarray(b, dtype=FLOAT)
    if a.shape != b.shape:
        raise ValueError(f"add shape mismatch: {a.shape} vs {b.shape}")
    return a + b


def xavier_uniform(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Uniform in [-s, +s] with s = sqrt(6 / (rows + cols))."""
    if rows <= 0 or cols <= 0:
        raise ValueError(f"dimensions must be positive: {rows}x{cols}")
    s = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-s, s, size=(rows, cols)).astype(FLOAT)


def zeros_matrix(rows: int, cols: int) -> np.ndarray:
    if rows <= 0 or cols <= 0:
        raise ValueError(f"dimensions must be positive: {rows}x{cols}")
    return np.zeros((rows, cols), dtype=FLOAT)


def init_params(rng, rows, cols, scheme="xavier"):
    """Initialize a weight matrix: 'xavier' (uniform Glorot) or 'zero'."""
    if scheme == "xavier":
        return xavier_uniform(rng, rows, cols)
    if scheme == "zero":
        return zeros_matrix(rows, cols)
    raise ValueError(f"unknown init scheme: {scheme!r}")


def check_finite(x, what="array"):
    """Raise if any entry is NaN or infinite."""
    if not np.all(np.isfinite(x)):
        raise FloatingPointError(f"non-finite values in {what}")
    return x
