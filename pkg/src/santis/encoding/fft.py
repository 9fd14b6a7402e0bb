"""Centered, orthonormal 2D Fourier transforms over the last two axes."""

import numpy as np


def fft2c(x):
    """DC at index (h//2, w//2) in both domains; unitary scaling."""
    x = np.asarray(x)
    return np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(x, axes=(-2, -1)), norm="ortho"), axes=(-2, -1))


def ifft2c(k):
    k = np.asarray(k)
    return np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(k, axes=(-2, -1)), norm="ortho"), axes=(-2, -1))
