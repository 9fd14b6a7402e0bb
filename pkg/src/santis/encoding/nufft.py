"""Kaiser-Bessel gridding NUFFT for 2D non-Cartesian sampling.

Coordinates are ``(kx, ky)`` in cycles/pixel with ``|k| <= 0.5``; ``kx`` runs
along image columns (axis 1) and ``ky`` along rows (axis 0). The forward
transform uses the same centered, unitary convention as :func:`fft2c`, so on
Cartesian coordinates ``k = (m - N/2) / N`` it reproduces ``fft2c`` samples.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp
from scipy.special import i0

from santis.errors import ValidationError

KB_WIDTH = 4
OVERSAMP = 1.5


def kb_beta(width: float = KB_WIDTH, oversamp: float = OVERSAMP) -> float:
    """Shape parameter from the usual gridding rule of Beatty et al."""
    return math.pi * math.sqrt((width / oversamp) ** 2 * (oversamp - 0.5) ** 2 - 0.8)


def kb_kernel(t, width=KB_WIDTH, beta=None):
    """Kernel value at offset ``t`` (grid units), normalized to 1 at the center."""
    beta = kb_beta(width) if beta is None else beta
    t = np.asarray(t, dtype=np.float64)
    arg = 1.0 - (2.0 * t / width) ** 2
    out = np.zeros_like(t)
    inside = arg >= 0
    out[inside] = i0(beta * np.sqrt(arg[inside])) / i0(beta)
    return out


def kb_transform(nu, width=KB_WIDTH, beta=None):
    """Continuous Fourier transform of :func:`kb_kernel` at frequency ``nu`` (cycles per grid unit)."""
    beta = kb_beta(width) if beta is None else beta
    z = np.sqrt((beta**2 - (math.pi * width * np.asarray(nu, dtype=np.float64)) ** 2).astype(np.complex128))
    small = np.abs(z) < 1e-8
    val = np.where(small, 1.0, np.sinh(z) / np.where(small, 1.0, z))
    return (width * val).real / i0(beta)


def _oversampled(n: int, oversamp: float) -> int:
    g = int(math.ceil(n * oversamp))
    return g + (g % 2)


class NufftPlan:
    """Precomputed interpolation matrix and deapodization for one trajectory."""

    def __init__(self, shape, coords, width=KB_WIDTH, oversamp=OVERSAMP):
        coords = np.asarray(coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ValidationError(f"coords must be (M, 2), got {coords.shape}")
        if np.any(np.abs(coords) > 0.5 + 1e-12):
            raise ValidationError("k-space coordinates must lie within [-0.5, 0.5] cycles/pixel")
        self.shape = tuple(int(s) for s in shape)
        self.coords = coords
        self.width = width
        self.beta = kb_beta(width, oversamp)
        self.grid = tuple(_oversampled(n, oversamp) for n in self.shape)
        self.scale = 1.0 / math.sqrt(self.shape[0] * self.shape[1])

        apod = []
        for n, g in zip(self.shape, self.grid):
            idx = np.arange(n) - n // 2
            apod.append(kb_transform(idx / g, width, self.beta))
        self.deapod = 1.0 / np.outer(apod[0], apod[1])
        self.matrix = self._interp_matrix()

    def _interp_matrix(self):
        g0, g1 = self.grid
        # axis 0 <- ky, axis 1 <- kx
        u0 = self.coords[:, 1] * g0
        u1 = self.coords[:, 0] * g1
        half = self.width / 2.0
        span = np.arange(-int(math.ceil(half)), int(math.ceil(half)) + 1)
        b0 = np.floor(u0)[:, None] + span[None, :]
        b1 = np.floor(u1)[:, None] + span[None, :]
        w0 = kb_kernel(u0[:, None] - b0, self.width, self.beta)
        w1 = kb_kernel(u1[:, None] - b1, self.width, self.beta)
        i0_ = (b0.astype(np.int64) + g0 // 2) % g0
        i1_ = (b1.astype(np.int64) + g1 // 2) % g1
        m = len(self.coords)
        ns = len(span)
        rows = np.repeat(np.arange(m), ns * ns)
        cols = (i0_[:, :, None] * g1 + i1_[:, None, :]).reshape(-1)
        vals = (w0[:, :, None] * w1[:, None, :]).reshape(-1)
        keep = vals != 0
        return sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(m, g0 * g1))

    @property
    def n_samples(self) -> int:
        return len(self.coords)

    def forward(self, x):
        """Image(s) ``(..., h, w)`` to samples ``(..., M)``."""
        x = np.asarray(x)
        lead = x.shape[:-2]
        if x.shape[-2:] != self.shape:
            raise ValidationError(f"image shape {x.shape[-2:]} does not match plan {self.shape}")
        g0, g1 = self.grid
        n0, n1 = self.shape
        pad = np.zeros(lead + self.grid, dtype=np.result_type(x, np.complex64))
        o0, o1 = g0 // 2 - n0 // 2, g1 // 2 - n1 // 2
        pad[..., o0 : o0 + n0, o1 : o1 + n1] = x * self.deapod
        k = np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(pad, axes=(-2, -1))), axes=(-2, -1))
        flat = k.reshape(-1, g0 * g1)
        y = (self.matrix @ flat.T).T * self.scale
        return y.reshape(lead + (self.n_samples,))

    def adjoint(self, y):
        """Exact adjoint of :meth:`forward`: samples ``(..., M)`` to image(s)."""
        y = np.asarray(y)
        lead = y.shape[:-1]
        if y.shape[-1] != self.n_samples:
            raise ValidationError(f"expected {self.n_samples} samples, got {y.shape[-1]}")
        g0, g1 = self.grid
        n0, n1 = self.shape
        flat = y.reshape(-1, self.n_samples)
        grid = (self.matrix.T @ flat.T).T.reshape(lead + self.grid) * self.scale
        img = np.fft.fftshift(
            np.fft.ifft2(np.fft.ifftshift(grid, axes=(-2, -1)), norm="forward"), axes=(-2, -1)
        )
        o0, o1 = g0 // 2 - n0 // 2, g1 // 2 - n1 // 2
        return img[..., o0 : o0 + n0, o1 : o1 + n1] * self.deapod


def ramp_weights(pattern, shape) -> np.ndarray:
    """Ramp density compensation ``|k|`` scaled so the weighted adjoint
    approximates the inverse transform.

    Every spoke carries its own DC sample, so each one gets ``1 / n_spokes`` of
    the central disc of radius half a sample spacing, i.e. ``|k| = 1 / (4 S)``.
    """
    s = pattern.samples_per_spoke
    r = np.abs(pattern.radii())
    r[r == 0] = 0.25 / s
    w = np.tile(r, pattern.n_spokes)
    return w * (shape[0] * shape[1]) * math.pi / (pattern.n_spokes * s)


def nufft_forward(x, pattern):
    x = np.asarray(x)
    return NufftPlan(x.shape[-2:], pattern.coords()).forward(x)


def nufft_adjoint(samples, pattern, shape, dcomp: str = "none"):
    """Adjoint NUFFT; ``dcomp='ramp'`` applies ramp weights first (gridding recon)."""
    samples = np.asarray(samples)
    if dcomp == "ramp":
        samples = samples * ramp_weights(pattern, shape)
    elif dcomp != "none":
        raise ValidationError(f"unknown density compensation {dcomp!r}")
    return NufftPlan(shape, pattern.coords()).adjoint(samples)

