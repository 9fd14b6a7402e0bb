"""Image quality metrics, all computed on magnitude images over the full frame."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter, sobel

from santis.errors import ValidationError


def _mag(x):
    x = np.asarray(x)
    return np.abs(x).astype(np.float64)


def _same_shape(a, b):
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch: {a.shape} vs {b.shape}")


def nrmse(recon, ref) -> float:
    """``|| |recon| - |ref| ||_2 / || |ref| ||_2``."""
    a, b = _mag(recon), _mag(ref)
    _same_shape(a, b)
    denom = np.linalg.norm(b)
    if denom == 0:
        raise ValidationError("reference image has zero norm")
    return float(np.linalg.norm(a - b) / denom)


def ssim(recon, ref, kernel_sigma: float = 2.0, data_range=None) -> float:
    """Mean structural similarity with a Gaussian window truncated at 3 sigma.

    ``data_range`` defaults to the reference maximum; pass ``"joint"`` to use
    the maximum over both images (symmetric in its arguments) or a number.
    The mean is taken over pixels whose window lies fully inside the image.
    """
    x, y = _mag(recon), _mag(ref)
    _same_shape(x, y)
    if data_range is None:
        L = y.max()
    elif data_range == "joint":
        L = max(x.max(), y.max())
    else:
        L = float(data_range)
    if L == 0:
        if not x.any() and not y.any():
            return 1.0
        raise ValidationError("data range is zero but the images differ")
    c1 = (0.01 * L) ** 2
    c2 = (0.03 * L) ** 2

    def blur(a):
        return gaussian_filter(a, kernel_sigma, truncate=3.0, mode="reflect")

    mx, my = blur(x), blur(y)
    sxx = blur(x * x) - mx * mx
    syy = blur(y * y) - my * my
    sxy = blur(x * y) - mx * my
    s = ((2 * mx * my + c1) * (2 * sxy + c2)) / ((mx**2 + my**2 + c1) * (sxx + syy + c2))
    pad = int(3.0 * kernel_sigma + 0.5)
    if min(s.shape) > 2 * pad:
        s = s[pad:-pad, pad:-pad]
    return float(s.mean())


def tenengrad(img) -> float:
    """Sum of squared Sobel gradient magnitudes over interior pixels."""
    a = _mag(img)
    gx = sobel(a, axis=1)
    gy = sobel(a, axis=0)
    return float(np.sum((gx**2 + gy**2)[1:-1, 1:-1]))


def tenengrad_reduction(recon, ref) -> float:
    """Relative loss of gradient energy, ``(T(ref) - T(recon)) / T(ref)``; negative means sharper than the reference."""
    a, b = _mag(recon), _mag(ref)
    _same_shape(a, b)
    t_ref = tenengrad(b)
    if t_ref == 0:
        raise ValidationError("reference has no gradient energy (constant image)")
    return float((t_ref - tenengrad(a)) / t_ref)
