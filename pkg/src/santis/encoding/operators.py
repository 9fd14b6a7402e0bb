"""Multi-coil encoding ``E = U F C``, its adjoint and the undersampled-image
operator ``Phi_u = C^H F^H U F C``."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from santis.data import CoilStack, ComplexImage
from santis.encoding.fft import fft2c, ifft2c
from santis.encoding.nufft import NufftPlan, ramp_weights
from santis.errors import ValidationError
from santis.sampling import CartesianMask, RadialPattern


def _arr(x):
    if isinstance(x, (ComplexImage, CoilStack)):
        return x.data
    return np.asarray(x)


@dataclass
class KspaceSamples:
    """Measured samples ``values[coil, sample]`` and their coordinates
    ``(kx, ky)`` in cycles/pixel."""

    values: np.ndarray
    coords: np.ndarray

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values))
        if self.values.shape[-1] == 0:
            raise ValidationError("sample set is empty")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("k-space samples contain non-finite values")
        if self.coords is not None and np.any(np.abs(self.coords) > 0.5 + 1e-12):
            raise ValidationError("sample coordinates outside [-0.5, 0.5]")

    @property
    def n_coils(self) -> int:
        return self.values.shape[0]

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]


@dataclass
class EncodingContext:
    """Sensitivities, sampling pattern and grid for one slice.

    ``dcomp`` selects the density weighting used by :meth:`zero_fill` and
    :func:`undersample_image` for radial data; it never affects the exact
    adjoint :func:`adjoint_encode`.
    """

    sens: np.ndarray
    pattern: CartesianMask | RadialPattern
    dcomp: str = "ramp"
    _plan: NufftPlan | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.sens = _arr(self.sens)
        if self.sens.ndim == 2:
            self.sens = self.sens[None]
        if self.sens.ndim != 3:
            raise ValidationError(f"sensitivities must be (n_coils, h, w), got {self.sens.shape}")
        if isinstance(self.pattern, CartesianMask):
            if self.pattern.n_lines_total != self.grid[0]:
                raise ValidationError(
                    f"mask has {self.pattern.n_lines_total} lines but the grid has {self.grid[0]} rows"
                )
        elif not isinstance(self.pattern, RadialPattern):
            raise ValidationError(f"unsupported pattern type {type(self.pattern).__name__}")

    @property
    def kind(self) -> str:
        return self.pattern.kind

    @property
    def grid(self) -> tuple[int, int]:
        return self.sens.shape[1:]

    @property
    def n_coils(self) -> int:
        return self.sens.shape[0]

    @property
    def plan(self) -> NufftPlan:
        if self._plan is None:
            self._plan = _cached_plan(self.grid, self.pattern)
        return self._plan

    def weights(self) -> np.ndarray | None:
        if self.kind == "radial" and self.dcomp == "ramp":
            return ramp_weights(self.pattern, self.grid)
        return None

    def coords(self) -> np.ndarray:
        if self.kind == "radial":
            return self.pattern.coords()
        h, w = self.grid
        lines = np.asarray(self.pattern.sampled_lines)
        ky = np.repeat((lines - h // 2) / h, w)
        kx = np.tile((np.arange(w) - w // 2) / w, len(lines))
        return np.stack([kx, ky], axis=1)


@lru_cache(maxsize=128)
def _cached_plan(grid, pattern) -> NufftPlan:
    return NufftPlan(grid, pattern.coords())


def _check_image(ctx, x):
    if x.shape[-2:] != ctx.grid:
        raise ValidationError(f"image shape {x.shape[-2:]} does not match encoding grid {ctx.grid}")


def encode(ctx: EncodingContext, x) -> KspaceSamples:
    x = _arr(x)
    _check_image(ctx, x)
    coil_imgs = ctx.sens * x[None]
    if ctx.kind == "radial":
        vals = ctx.plan.forward(coil_imgs)
    else:
        lines = list(ctx.pattern.sampled_lines)
        vals = fft2c(coil_imgs)[:, lines, :].reshape(ctx.n_coils, -1)
    return KspaceSamples(vals, ctx.coords())


def _grid_adjoint(ctx, values):
    """Per-coil images from samples (zero-filled inverse transform)."""
    if ctx.kind == "radial":
        return ctx.plan.adjoint(values)
    h, w = ctx.grid
    lines = list(ctx.pattern.sampled_lines)
    k = np.zeros((values.shape[0], h, w), dtype=np.result_type(values, np.complex64))
    k[:, lines, :] = values.reshape(values.shape[0], len(lines), w)
    return ifft2c(k)


def _check_samples(ctx, d):
    values = d.values if isinstance(d, KspaceSamples) else np.atleast_2d(np.asarray(d))
    if values.shape[-1] == 0:
        raise ValidationError("sample set is empty")
    if values.shape[0] != ctx.n_coils:
        raise ValidationError(f"samples have {values.shape[0]} coils, sensitivities {ctx.n_coils}")
    expected = len(ctx.pattern.sampled_lines) * ctx.grid[1] if ctx.kind == "cartesian" else ctx.plan.n_samples
    if values.shape[1] != expected:
        raise ValidationError(f"expected {expected} samples per coil, got {values.shape[1]}")
    return values


def adjoint_encode(ctx: EncodingContext, d, weighted: bool = False) -> np.ndarray:
    """``E^H d``; with ``weighted=True`` radial samples are density-compensated first."""
    values = _check_samples(ctx, d)
    w = ctx.weights() if weighted else None
    if w is not None:
        values = values * w
    coil_imgs = _grid_adjoint(ctx, values)
    return np.sum(np.conj(ctx.sens) * coil_imgs, axis=0)


def zero_fill(ctx: EncodingContext, d) -> np.ndarray:
    """Zero-filled (Cartesian) or gridding (radial, density-compensated) reconstruction."""
    return adjoint_encode(ctx, d, weighted=True)


def undersample_image(ctx: EncodingContext, x) -> np.ndarray:
    """Coil-combined aliased image ``C^H F^H W U F C x``.

    ``W`` is the radial density weighting (identity for Cartesian), so the
    operator is Hermitian positive semi-definite in both cases.
    """
    x = _arr(x)
    _check_image(ctx, x)
    if ctx.kind == "cartesian":
        mask = ctx.pattern.vector()[:, None]
        coil_imgs = ifft2c(fft2c(ctx.sens * x[None]) * mask)
    else:
        vals = ctx.plan.forward(ctx.sens * x[None])
        w = ctx.weights()
        coil_imgs = ctx.plan.adjoint(vals if w is None else vals * w)
    return np.sum(np.conj(ctx.sens) * coil_imgs, axis=0)


def full_cartesian_mask(n_lines: int) -> CartesianMask:
    return CartesianMask(n_lines, tuple(range(n_lines)), (0, n_lines))
