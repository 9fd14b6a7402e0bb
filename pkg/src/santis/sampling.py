"""Undersampling pattern libraries: variable-density Cartesian masks and
golden-angle radial spoke windows.

Cartesian masks select phase-encode lines, i.e. rows of the centered k-space
array (axis 0). Radial spokes are full diameters through DC, so angles are
only meaningful modulo pi.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from santis.data import ensure_dir, load_tensor, save_tensor
from santis.errors import ValidationError

# Golden-angle increment for diameter spokes, 111.246 degrees.
GOLDEN_ANGLE = math.pi * (math.sqrt(5.0) - 1.0) / 2.0
LIBRARY_CAP = 3000


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class CartesianMask:
    n_lines_total: int
    sampled_lines: tuple[int, ...]
    center_block: tuple[int, int]

    def __post_init__(self):
        lo, hi = self.center_block
        if not set(range(lo, hi)) <= set(self.sampled_lines):
            raise ValidationError("center block is not fully sampled")
        if list(self.sampled_lines) != sorted(set(self.sampled_lines)):
            raise ValidationError("sampled_lines must be sorted and unique")

    @property
    def kind(self) -> str:
        return "cartesian"

    def vector(self) -> np.ndarray:
        v = np.zeros(self.n_lines_total, dtype=bool)
        v[list(self.sampled_lines)] = True
        return v

    @property
    def acceleration(self) -> float:
        return self.n_lines_total / len(self.sampled_lines)


@dataclass(frozen=True)
class RadialPattern:
    spoke_angles: tuple[float, ...]
    samples_per_spoke: int
    start_index: int = 0

    @property
    def kind(self) -> str:
        return "radial"

    @property
    def n_spokes(self) -> int:
        return len(self.spoke_angles)

    def radii(self) -> np.ndarray:
        """Signed readout positions in cycles/pixel; DC sits at index S//2."""
        s = self.samples_per_spoke
        return (np.arange(s) - s // 2) / s

    def coords(self) -> np.ndarray:
        """Sample coordinates ``(kx, ky)`` in cycles/pixel, shape ``(n_spokes * S, 2)``."""
        ang = np.asarray(self.spoke_angles)[:, None]
        r = self.radii()[None, :]
        kx = (r * np.cos(ang)).ravel()
        ky = (r * np.sin(ang)).ravel()
        return np.stack([kx, ky], axis=1)


@dataclass
class PatternLibrary:
    kind: str
    entries: list
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def contains(self, pattern) -> bool:
        if self.kind == "cartesian":
            return any(e.sampled_lines == pattern.sampled_lines for e in self.entries)
        target = np.asarray(pattern.spoke_angles)
        return any(
            e.n_spokes == len(target) and np.allclose(e.spoke_angles, target, rtol=0, atol=1e-12)
            for e in self.entries
        )


# --------------------------------------------------------------------------
# Cartesian


def _center_block(n_lines: int, center_frac: float) -> tuple[int, int]:
    n_center = max(1, _round_half_up(center_frac * n_lines))
    lo = n_lines // 2 - n_center // 2
    return lo, lo + n_center


def _vd_weights(n_lines: int, candidates: np.ndarray) -> np.ndarray:
    sigma = n_lines / 6.0
    w = np.exp(-0.5 * ((candidates - n_lines // 2) / sigma) ** 2)
    return w / w.sum()


def _check_cartesian(n_lines, R, center_frac):
    if not 1 < R <= n_lines:
        raise ValidationError(f"acceleration R must satisfy 1 < R <= n_lines, got R={R}")
    if not 0 < center_frac < 1.0 / R:
        raise ValidationError(f"center_frac must lie in (0, 1/R), got {center_frac}")
    budget = _round_half_up(n_lines / R)
    lo, hi = _center_block(n_lines, center_frac)
    if hi - lo >= budget:
        raise ValidationError(f"center block of {hi - lo} lines leaves no room in a {budget}-line budget")
    return budget, (lo, hi)


def random_cartesian_mask(n_lines: int, R: float, center_frac: float, rng: np.random.Generator) -> CartesianMask:
    """Draw one variable-density mask: fixed center block plus Gaussian-weighted lines."""
    budget, (lo, hi) = _check_cartesian(n_lines, R, center_frac)
    candidates = np.setdiff1d(np.arange(n_lines), np.arange(lo, hi))
    picks = rng.choice(candidates, size=budget - (hi - lo), replace=False, p=_vd_weights(n_lines, candidates))
    lines = np.union1d(np.arange(lo, hi), picks)
    return CartesianMask(n_lines, tuple(int(i) for i in lines), (lo, hi))


def make_cartesian_library(n_masks: int, n_lines: int, R: float, center_frac: float = 0.05, seed: int = 0) -> PatternLibrary:
    """Generate ``n_masks`` pairwise-distinct masks, deterministic in ``seed``."""
    _check_cartesian(n_lines, R, center_frac)
    rng = np.random.default_rng(seed)
    seen = set()
    entries = []
    attempts = 0
    while len(entries) < n_masks:
        attempts += 1
        if attempts > 100 * n_masks + 1000:
            raise ValidationError(f"could not draw {n_masks} distinct masks; the pattern space is too small")
        m = random_cartesian_mask(n_lines, R, center_frac, rng)
        if m.sampled_lines in seen:
            continue
        seen.add(m.sampled_lines)
        entries.append(m)
    params = dict(n_masks=n_masks, n_lines=n_lines, R=R, center_frac=center_frac)
    return PatternLibrary("cartesian", entries, seed, params)


# --------------------------------------------------------------------------
# radial


def golden_angle_window(start: int, window: int, samples_per_spoke: int) -> RadialPattern:
    k = np.arange(start, start + window, dtype=np.float64)
    angles = np.mod(k * GOLDEN_ANGLE, np.pi)
    return RadialPattern(tuple(float(a) for a in angles), samples_per_spoke, start)


def make_radial_library(n_total_rotations: int, window: int = 89, samples_per_spoke: int = 256,
                        max_entries: int = LIBRARY_CAP) -> PatternLibrary:
    """Sliding windows of ``window`` consecutive spokes over one golden-angle sequence."""
    if window <= 0:
        raise ValidationError(f"window must be positive, got {window}")
    if window > n_total_rotations:
        raise ValidationError(f"window {window} exceeds the {n_total_rotations} available rotations")
    if samples_per_spoke < 2:
        raise ValidationError("samples_per_spoke must be >= 2")
    count = min(n_total_rotations - window + 1, max_entries)
    entries = [golden_angle_window(i, window, samples_per_spoke) for i in range(count)]
    params = dict(n_total_rotations=n_total_rotations, window=window, samples_per_spoke=samples_per_spoke)
    return PatternLibrary("radial", entries, 0, params)


# --------------------------------------------------------------------------
# selection and held-out patterns


def select_pattern(lib: PatternLibrary, mode: str, rng: np.random.Generator):
    """Return ``(pattern, index)``; augmented mode advances ``rng`` by one draw."""
    if len(lib) == 0:
        raise ValidationError("pattern library is empty")
    if mode == "fixed":
        return lib.entries[0], 0
    if mode == "augmented":
        i = int(rng.integers(len(lib)))
        return lib.entries[i], i
    raise ValidationError(f"unknown selection mode {mode!r}")


def heldout_pattern(lib: PatternLibrary, seed: int = 10_007):
    """A pattern with the library's parameters that is not a member of it.

    Cartesian: drawn from an independent seed. Radial: the window starting just
    past the end of the library's rotation sequence.
    """
    if lib.kind == "cartesian":
        p = lib.params
        rng = np.random.default_rng(seed)
        for _ in range(1000):
            m = random_cartesian_mask(p["n_lines"], p["R"], p["center_frac"], rng)
            if not lib.contains(m):
                return m
        raise ValidationError("could not find a mask outside the library")
    p = lib.params
    start = p["n_total_rotations"] + seed % 997
    pat = golden_angle_window(start, p["window"], p["samples_per_spoke"])
    assert not lib.contains(pat)
    return pat


# --------------------------------------------------------------------------
# serialization


def save_library(lib: PatternLibrary, out_dir) -> Path:
    out = ensure_dir(out_dir)
    if lib.kind == "cartesian":
        arr = np.stack([e.vector() for e in lib.entries]).astype(np.float32)
        extra = {"center_blocks": [list(e.center_block) for e in lib.entries]}
    else:
        arr = np.array([e.spoke_angles for e in lib.entries], dtype=np.float64)
        extra = {"start_indices": [e.start_index for e in lib.entries]}
    save_tensor(arr, out / "library.tensor", tag=f"{lib.kind}-library")
    manifest = {"kind": lib.kind, "seed": lib.seed, "params": lib.params, **extra}
    (out / "library.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return out


def load_library(in_dir) -> PatternLibrary:
    d = Path(in_dir)
    manifest = json.loads((d / "library.json").read_text())
    arr, _ = load_tensor(d / "library.tensor")
    kind = manifest["kind"]
    if kind == "cartesian":
        entries = [
            CartesianMask(arr.shape[1], tuple(int(i) for i in np.flatnonzero(row)), tuple(cb))
            for row, cb in zip(arr, manifest["center_blocks"])
        ]
    else:
        s = manifest["params"]["samples_per_spoke"]
        entries = [
            RadialPattern(tuple(float(a) for a in row), s, int(st))
            for row, st in zip(arr, manifest["start_indices"])
        ]
    return PatternLibrary(kind, entries, manifest["seed"], manifest["params"])
