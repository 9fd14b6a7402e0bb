"""Coil sensitivity estimation (adaptive combination) and SVD coil compression."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import uniform_filter

from santis.data import CoilStack
from santis.encoding.operators import KspaceSamples
from santis.errors import ValidationError


def estimate_sensitivities(coils, block: int = 5, eps: float = 1e-12) -> np.ndarray:
    """Walsh adaptive-combination sensitivities.

    For each pixel the coil covariance is averaged over a ``block x block``
    window and its dominant eigenvector taken as the local sensitivity vector.
    Maps come out with unit root-sum-of-squares and coil 0 at zero phase.
    Pixels whose window holds no signal get all-zero maps.
    """
    data = coils.data if isinstance(coils, CoilStack) else np.asarray(coils)
    if data.ndim == 2:
        data = data[None]
    nc, h, w = data.shape
    if block < 2:
        raise ValidationError(f"block must be >= 2, got {block}")
    if block > min(h, w):
        raise ValidationError(f"block {block} larger than image {h}x{w}")
    if nc == 1:
        mag = np.abs(data[0])
        support = uniform_filter(mag**2, block, mode="constant") > eps
        return support[None].astype(np.complex128)

    cov = data[:, None] * np.conj(data[None, :])  # (nc, nc, h, w)
    cov = uniform_filter(cov.real, (1, 1, block, block), mode="constant") + 1j * uniform_filter(
        cov.imag, (1, 1, block, block), mode="constant"
    )
    cov = np.moveaxis(cov, (0, 1), (-2, -1))  # (h, w, nc, nc)
    vals, vecs = np.linalg.eigh(cov)
    v = vecs[..., -1]  # (h, w, nc), unit norm
    ref = v[..., :1]
    phase = np.where(np.abs(ref) > 0, np.conj(ref) / np.maximum(np.abs(ref), 1e-300), 1.0)
    v = v * phase
    scale = np.trace(cov, axis1=-2, axis2=-1).real
    v[scale <= eps * max(scale.max(), 1.0)] = 0
    return np.moveaxis(v, -1, 0)


def compression_matrix(values: np.ndarray, n_virtual: int) -> tuple[np.ndarray, float]:
    """Left singular vectors of the ``(n_coils, n_samples)`` data, as an
    ``(n_virtual, n_coils)`` projection, and the retained energy fraction."""
    values = np.asarray(values)
    nc = values.shape[0]
    if n_virtual <= 0:
        raise ValidationError(f"n_virtual must be positive, got {n_virtual}")
    if n_virtual > nc:
        raise ValidationError(f"n_virtual {n_virtual} exceeds {nc} physical coils")
    u, s, _ = np.linalg.svd(values.reshape(nc, -1), full_matrices=False)
    energy = float(np.sum(s[:n_virtual] ** 2) / np.sum(s**2))
    return np.conj(u[:, :n_virtual]).T, energy


def coil_compress(k: KspaceSamples, n_virtual: int) -> tuple[KspaceSamples, float]:
    """Project samples onto the ``n_virtual`` dominant coil-space components."""
    a, energy = compression_matrix(k.values, n_virtual)
    return KspaceSamples(a @ k.values, k.coords), energy


def apply_compression(a: np.ndarray, stack: np.ndarray) -> np.ndarray:
    """Apply a compression matrix to coil images or sensitivities ``(n_coils, h, w)``."""
    return np.tensordot(a, np.asarray(stack), axes=(1, 0))
