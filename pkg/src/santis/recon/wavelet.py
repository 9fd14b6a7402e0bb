"""Orthonormal periodized 2D discrete wavelet transform (Daubechies-4, 8 taps).

Coefficients live in the usual in-place pyramid layout: after ``levels``
stages the top-left ``(h >> levels, w >> levels)`` block is the approximation
band and each ring holds the LH / HL / HH details of one level.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp
import numpy as np

from santis.errors import ValidationError


def daubechies_lowpass(moments: int = 4) -> np.ndarray:
    """Minimum-phase Daubechies scaling filter with ``moments`` vanishing
    moments (``2 * moments`` taps), by spectral factorization in 50-digit arithmetic."""
    with mp.workdps(50):
        n = moments
        poly = [mp.binomial(n - 1 + k, k) for k in range(n)][::-1]
        roots = mp.polyroots(poly, maxsteps=200, extraprec=200) if n > 1 else []
        q = [mp.mpf(1)]
        for y in roots:
            part = 2 * mp.sqrt(y * (y - 1))
            z = 1 - 2 * y + part
            if abs(z) < 1:
                z = 1 - 2 * y - part
            q = _polymul(q, [mp.mpf(1), -z])
        for _ in range(n):
            q = _polymul(q, [mp.mpf(1), mp.mpf(1)])
        q = [mp.re(c) for c in q]
        total = sum(q)
        h = [c / total * mp.sqrt(2) for c in q][::-1]
        return np.array([float(c) for c in h])


def _polymul(a, b):
    out = [mp.mpf(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


DB4_LOWPASS = daubechies_lowpass(4)
DB4_HIGHPASS = ((-1) ** np.arange(8)) * DB4_LOWPASS[::-1]


def _analysis_1d(x, axis):
    x = np.moveaxis(x, axis, -1)
    n = x.shape[-1]
    half = n // 2
    lo = np.zeros(x.shape[:-1] + (half,), dtype=x.dtype)
    hi = np.zeros_like(lo)
    base = 2 * np.arange(half)
    for t in range(len(DB4_LOWPASS)):
        xs = x[..., (base + t) % n]
        lo += DB4_LOWPASS[t] * xs
        hi += DB4_HIGHPASS[t] * xs
    out = np.concatenate([lo, hi], axis=-1)
    return np.moveaxis(out, -1, axis)


def _synthesis_1d(c, axis):
    c = np.moveaxis(c, axis, -1)
    n = c.shape[-1]
    half = n // 2
    lo, hi = c[..., :half], c[..., half:]
    x = np.zeros_like(c)
    base = 2 * np.arange(half)
    for t in range(len(DB4_LOWPASS)):
        idx = (base + t) % n
        x[..., idx] += DB4_LOWPASS[t] * lo + DB4_HIGHPASS[t] * hi
    return np.moveaxis(x, -1, axis)


def max_levels(shape) -> int:
    n = min(shape)
    levels = 0
    while n % 2 == 0 and n > 1:
        n //= 2
        levels += 1
    return levels


def _check(shape, levels):
    if len(shape) != 2:
        raise ValidationError(f"wavelet transform needs a 2D array, got shape {shape}")
    step = 1 << levels
    if shape[0] % step or shape[1] % step:
        raise ValidationError(f"image shape {shape} is not divisible by 2**{levels}")


@dataclass
class WaveletCoeffs:
    pyramid: np.ndarray
    levels: int

    @property
    def approx(self) -> np.ndarray:
        h, w = self.pyramid.shape
        return self.pyramid[: h >> self.levels, : w >> self.levels]

    def details(self, level: int):
        """``(LH, HL, HH)`` sub-bands; level 1 is the finest."""
        h, w = self.pyramid.shape
        h1, w1 = h >> (level - 1), w >> (level - 1)
        h2, w2 = h1 // 2, w1 // 2
        p = self.pyramid
        return p[h2:h1, :w2], p[:h2, w2:w1], p[h2:h1, w2:w1]

    @property
    def size(self) -> int:
        return self.pyramid.size


def wavelet_forward(x, levels: int = 6) -> WaveletCoeffs:
    x = np.array(x, copy=True)
    _check(x.shape, levels)
    h, w = x.shape
    for lev in range(levels):
        hh, ww = h >> lev, w >> lev
        sub = x[:hh, :ww]
        sub = _analysis_1d(_analysis_1d(sub, 0), 1)
        x[:hh, :ww] = sub
    return WaveletCoeffs(x, levels)


def wavelet_inverse(c: WaveletCoeffs) -> np.ndarray:
    x = np.array(c.pyramid, copy=True)
    h, w = x.shape
    for lev in reversed(range(c.levels)):
        hh, ww = h >> lev, w >> lev
        x[:hh, :ww] = _synthesis_1d(_synthesis_1d(x[:hh, :ww], 1), 0)
    return x
