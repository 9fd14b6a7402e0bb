"""Image containers, the on-disk tensor format and the synthetic phantom generator.

The tensor file layout is::

    [4 bytes]  little-endian uint32 header length n
    [n bytes]  UTF-8 JSON header {"dtype", "shape", "byte_order", "tag", "meta"}
    [rest]     raw little-endian payload, complex values interleaved (re, im)
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from santis.errors import ValidationError

DTYPES = {
    "c64": np.dtype("<c8"),
    "c128": np.dtype("<c16"),
    "f32": np.dtype("<f4"),
    "f64": np.dtype("<f8"),
}
_CODES = {np.dtype(v).newbyteorder("="): k for k, v in DTYPES.items()}


@dataclass
class ComplexImage:
    """A 2D complex image, row-major, indexed ``data[row, col]``."""

    data: np.ndarray
    label: str | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if not np.iscomplexobj(self.data):
            self.data = self.data.astype(np.complex128)
        if self.data.ndim != 2:
            raise ValidationError(f"image must be 2D, got shape {self.data.shape}")
        if self.height < 8 or self.width < 8:
            raise ValidationError(f"image must be at least 8x8, got {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValidationError("image contains non-finite values")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def magnitude(self) -> np.ndarray:
        return np.abs(self.data)


@dataclass
class CoilStack:
    """Per-coil images stacked along the first axis, shape ``(n_coils, h, w)``."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim == 2:
            self.data = self.data[None]
        if self.data.ndim != 3 or self.data.shape[0] < 1:
            raise ValidationError(f"coil stack must be (n_coils, h, w), got {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValidationError("coil stack contains non-finite values")

    @classmethod
    def from_images(cls, images):
        shapes = {im.shape for im in images}
        if len(shapes) != 1:
            raise ValidationError(f"coil images differ in shape: {sorted(shapes)}")
        return cls(np.stack([im.data for im in images]))

    @property
    def n_coils(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[1:]

    @property
    def images(self) -> list[ComplexImage]:
        return [ComplexImage(d) for d in self.data]


# --------------------------------------------------------------------------
# tensor container


def dtype_code(arr: np.ndarray) -> str:
    try:
        return _CODES[arr.dtype.newbyteorder("=")]
    except KeyError:
        raise ValidationError(f"unsupported dtype {arr.dtype}; expected one of {sorted(DTYPES)}") from None


def save_tensor(arr, path, dtype: str | None = None, tag: str = "", meta: dict | None = None) -> None:
    """Write ``arr`` to ``path`` in the tensor container format.

    ``dtype`` may be given to assert the stored type; it must agree with the
    array's own dtype (no implicit casts).
    """
    arr = np.asarray(arr)
    code = dtype_code(arr)
    if dtype is not None and dtype != code:
        raise ValidationError(f"dtype mismatch: array is {code}, requested {dtype}")
    header = {
        "dtype": code,
        "shape": list(arr.shape),
        "byte_order": "little",
        "tag": tag,
        "meta": meta or {},
    }
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = np.ascontiguousarray(arr, dtype=DTYPES[code]).tobytes()
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            fh.write(struct.pack("<I", len(hbytes)))
            fh.write(hbytes)
            fh.write(payload)
    except OSError as exc:
        raise OSError(f"could not write tensor file {path}: {exc}") from exc


def load_tensor(path) -> tuple[np.ndarray, dict]:
    """Read a tensor file, returning ``(array, header)``."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"tensor file not found: {path}")
    raw = path.read_bytes()
    if len(raw) < 4:
        raise ValidationError(f"{path}: truncated header length")
    (hlen,) = struct.unpack("<I", raw[:4])
    if 4 + hlen > len(raw):
        raise ValidationError(f"{path}: header length {hlen} exceeds file size")
    try:
        header = json.loads(raw[4 : 4 + hlen].decode("utf-8"))
        code = header["dtype"]
        shape = [int(s) for s in header["shape"]]
    except (ValueError, KeyError, TypeError) as exc:
        raise ValidationError(f"{path}: malformed header: {exc}") from exc
    if code not in DTYPES:
        raise ValidationError(f"{path}: unknown dtype {code!r}")
    if header.get("byte_order", "little") != "little":
        raise ValidationError(f"{path}: only little-endian payloads are supported")
    payload = raw[4 + hlen :]
    expected = int(np.prod(shape, dtype=np.int64)) * DTYPES[code].itemsize
    if len(payload) != expected:
        raise ValidationError(
            f"{path}: payload size mismatch: header {code}{shape} needs {expected} bytes, found {len(payload)}"
        )
    arr = np.frombuffer(payload, dtype=DTYPES[code]).reshape(shape).copy()
    return arr, header


# --------------------------------------------------------------------------
# phantoms


@dataclass(frozen=True)
class PhantomSpec:
    seed: int = 0
    grid: int = 128
    n_ellipses: int = 8
    texture_amp: float = 0.1
    n_coils: int = 4
    contrast_scale: float = 1.0
    flat_coils: bool = False

    def validate(self):
        if self.grid < 8 or self.grid & (self.grid - 1):
            raise ValidationError(f"grid must be a power of two >= 8, got {self.grid}")
        if self.n_ellipses < 3:
            raise ValidationError(f"n_ellipses must be >= 3, got {self.n_ellipses}")
        if not 0.0 <= self.texture_amp <= 1.0:
            raise ValidationError(f"texture_amp must lie in [0, 1], got {self.texture_amp}")
        if self.n_coils < 1:
            raise ValidationError(f"n_coils must be >= 1, got {self.n_coils}")
        if not self.contrast_scale > 0:
            raise ValidationError(f"contrast_scale must be positive, got {self.contrast_scale}")


def _ellipse(yy, xx, cy, cx, ay, ax, theta):
    c, s = np.cos(theta), np.sin(theta)
    u = (xx - cx) * c + (yy - cy) * s
    v = -(xx - cx) * s + (yy - cy) * c
    return (u / ax) ** 2 + (v / ay) ** 2 <= 1.0


def _lowpass_noise(rng, n, cutoff):
    noise = rng.standard_normal((n, n))
    k = np.fft.fftfreq(n)
    kk = np.hypot(*np.meshgrid(k, k, indexing="ij"))
    tex = np.fft.ifft2(np.fft.fft2(noise) * (kk < cutoff)).real
    sd = tex.std()
    if sd < 1e-8 * np.abs(tex).max(initial=1e-300):
        # tiny grids keep only the DC term: no texture to speak of
        return np.zeros_like(tex)
    return tex / sd


def support_mask(spec: PhantomSpec) -> np.ndarray:
    """Object support (the body ellipse) of the phantom described by ``spec``."""
    return _phantom_parts(spec)[1]


def _phantom_parts(spec):
    rng = np.random.default_rng(spec.seed)
    n = spec.grid
    ax1 = (np.arange(n) - n // 2) / (n / 2)
    yy, xx = np.meshgrid(ax1, ax1, indexing="ij")

    body = _ellipse(
        yy, xx,
        rng.uniform(-0.04, 0.04), rng.uniform(-0.04, 0.04),
        rng.uniform(0.72, 0.88), rng.uniform(0.6, 0.8),
        rng.uniform(-0.3, 0.3),
    )
    img = np.where(body, rng.uniform(0.6, 0.8), 0.0)
    for _ in range(spec.n_ellipses - 1):
        r = 0.55 * np.sqrt(rng.uniform())
        a = rng.uniform(0, 2 * np.pi)
        e = _ellipse(
            yy, xx, r * np.sin(a), r * np.cos(a),
            rng.uniform(0.04, 0.3), rng.uniform(0.04, 0.3),
            rng.uniform(0, np.pi),
        )
        img = img + np.where(e & body, spec.contrast_scale * rng.uniform(-0.35, 0.4), 0.0)
    img = np.clip(img, 0.0, None)
    tex = _lowpass_noise(rng, n, cutoff=0.12)
    img = np.clip(img * (1.0 + spec.texture_amp * tex) * body, 0.0, None)
    # partial-volume blur: finite-resolution edges rather than pixel-sharp steps
    img = gaussian_filter(img, 0.7)

    coef = rng.normal(0.0, 0.5, size=5)
    phase = coef[0] + coef[1] * xx + coef[2] * yy + coef[3] * xx * yy + coef[4] * (xx**2 - yy**2)
    ref = img * np.exp(1j * phase)
    return ref, body, rng, yy, xx


def generate_phantom(spec: PhantomSpec) -> tuple[ComplexImage, CoilStack, CoilStack]:
    """Build ``(reference, coil_images, sensitivities)`` from a seeded spec.

    Sensitivities are Gaussian blobs placed around the object with a linear
    phase per coil, normalized to unit root-sum-of-squares at every pixel.
    A single coil, or ``flat_coils=True``, gives all-ones maps.
    """
    spec.validate()
    ref, body, rng, yy, xx = _phantom_parts(spec)

    nc = spec.n_coils
    if nc == 1 or spec.flat_coils:
        sens = np.ones((nc, spec.grid, spec.grid), dtype=np.complex128) / np.sqrt(nc)
    else:
        angles = 2 * np.pi * np.arange(nc) / nc + rng.uniform(-0.2, 0.2, nc)
        width = rng.uniform(0.7, 0.9, nc)
        slopes = rng.normal(0.0, 1.0, (nc, 2))
        offs = rng.uniform(-np.pi, np.pi, nc)
        maps = []
        for c in range(nc):
            py, px = 1.1 * np.sin(angles[c]), 1.1 * np.cos(angles[c])
            mag = np.exp(-((yy - py) ** 2 + (xx - px) ** 2) / (2 * width[c] ** 2))
            ph = offs[c] + slopes[c, 0] * xx + slopes[c, 1] * yy
            maps.append(mag * np.exp(1j * ph))
        sens = np.stack(maps)
        sens /= np.sqrt(np.sum(np.abs(sens) ** 2, axis=0, keepdims=True))

    coils = sens * ref[None]
    return (
        ComplexImage(ref, label=f"phantom-{spec.seed}"),
        CoilStack(coils),
        CoilStack(sens),
    )


def add_noise(coils: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Complex white Gaussian noise with per-component standard deviation ``sigma``."""
    if sigma <= 0:
        return coils
    noise = rng.standard_normal(coils.shape) + 1j * rng.standard_normal(coils.shape)
    return coils + sigma * noise


def ensure_dir(path) -> Path:
    path = Path(path)
    os.makedirs(path, exist_ok=True)
    return path
