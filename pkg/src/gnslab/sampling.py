"""Seeded randomness primitives.

All randomness in the package flows through ``numpy.random.Generator``
instances created from explicit seeds; nothing reads ambient entropy.
"""

from __future__ import annotations

import numpy as np


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.PCG64(seed))


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def unit_vectors(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    """n rows, each a unit vector in C^dim."""
    v = complex_normal(rng, (n, dim))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return v / norms


def haar_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    z = complex_normal(rng, (n, n))
    q, r = np.linalg.qr(z)
    phases = np.diagonal(r).copy()
    phases[phases == 0.0] = 1.0
    return q * (phases / np.abs(phases))


def random_isometry(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """rows x cols matrix with orthonormal columns (rows >= cols)."""
    if cols > rows:
        raise ValueError("isometry needs rows >= cols")
    return haar_unitary(rng, rows)[:, :cols]


def random_psd(rng: np.random.Generator, n: int, rank: int | None = None) -> np.ndarray:
    """Random PSD matrix F F* with a complex Gaussian factor."""
    rank = n if rank is None else rank
    f = complex_normal(rng, (n, max(rank, 1)))
    mat = f @ f.conj().T
    return 0.5 * (mat + mat.conj().T)
