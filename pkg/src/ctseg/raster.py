"""Raster primitives: slices, datasets, skull thresholding and the index array.

Rasters are 2D ``numpy`` arrays indexed ``[row, col]``. Grayscale data is
``uint8``; binary images use the two levels 0 and 255.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SKULL_THRESHOLD = 240
MAX_SCALE_EXP = 9


@dataclass(frozen=True)
class GraySlice:
    """One 8-bit grayscale slice and its position in acquisition order."""

    pixels: np.ndarray
    acq_index: int = 0
    name: str | None = None

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"slice must be a non-empty 2D raster, got shape {px.shape}")
        if px.dtype != np.uint8:
            if px.size and (px.min() < 0 or px.max() > 255):
                raise ValueError("intensities must lie in [0, 255]")
            px = px.astype(np.uint8)
        if self.acq_index < 0:
            raise ValueError("acq_index must be nonnegative")
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape


@dataclass(frozen=True)
class CtDataset:
    """All slices of one acquisition, sorted by ``acq_index``."""

    slices: tuple[GraySlice, ...]
    source_id: str = ""

    def __init__(self, slices: Sequence[GraySlice], source_id: str = ""):
        slices = tuple(slices)
        if not slices:
            raise ValueError("dataset must contain at least one slice")
        shape = slices[0].shape
        for s in slices:
            if s.shape != shape:
                raise ValueError(
                    f"slice {s.acq_index} has shape {s.shape}, expected {shape}"
                )
        idx = [s.acq_index for s in slices]
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("acq_index values must be strictly increasing")
        object.__setattr__(self, "slices", slices)
        object.__setattr__(self, "source_id", source_id)

    @classmethod
    def from_unordered(cls, slices: Sequence[GraySlice], source_id: str = "") -> "CtDataset":
        return cls(sorted(slices, key=lambda s: s.acq_index), source_id)

    def __len__(self) -> int:
        return len(self.slices)

    def __iter__(self):
        return iter(self.slices)

    def __getitem__(self, i: int) -> GraySlice:
        return self.slices[i]

    @property
    def shape(self) -> tuple[int, int]:
        return self.slices[0].shape

    def position_of(self, acq_index: int) -> int:
        for i, s in enumerate(self.slices):
            if s.acq_index == acq_index:
                return i
        raise KeyError(acq_index)


def _as_array(img) -> np.ndarray:
    return img.pixels if isinstance(img, GraySlice) else np.asarray(img)


def _check_thresh(thresh: int) -> None:
    if not 1 <= thresh <= 255:
        raise ValueError(f"threshold must be in [1, 255], got {thresh}")


def threshold_skull(img, thresh: int = SKULL_THRESHOLD) -> np.ndarray:
    """Zero every pixel at or above ``thresh``; other pixels are kept as is."""
    _check_thresh(thresh)
    px = _as_array(img)
    out = px.copy()
    out[px >= thresh] = 0
    return out


def binarize(img, thresh: int = SKULL_THRESHOLD) -> np.ndarray:
    """Two-level image: 0 below ``thresh``, 255 at or above it."""
    _check_thresh(thresh)
    px = _as_array(img)
    return np.where(px >= thresh, 255, 0).astype(np.uint8)


def scale_exponent(extent: int) -> int:
    """Smallest ``l`` with ``extent + 1 < 10**l``."""
    l = 1
    while extent + 1 >= 10**l:
        l += 1
    return l


@dataclass(frozen=True)
class IndexArray:
    """Positional encoding of nonzero pixels.

    A nonzero pixel at ``(row, col)`` stores ``(row + 1) * 10**scale_exp + (col + 1)``
    and background stores 0, so horizontal neighbours differ by 1 and vertical
    neighbours by ``10**scale_exp``.
    """

    encoded: np.ndarray
    scale_exp: int = field(default=1)

    @property
    def width(self) -> int:
        return self.encoded.shape[1]

    @property
    def height(self) -> int:
        return self.encoded.shape[0]

    @property
    def base(self) -> int:
        return 10**self.scale_exp

    def nonzero_values(self) -> np.ndarray:
        """Sorted encoded values of the foreground (the 'modified' index array)."""
        flat = self.encoded.ravel()
        return np.sort(flat[flat != 0])


def build_index_array(img) -> IndexArray:
    px = _as_array(img)
    h, w = px.shape
    l = scale_exponent(w)
    if l > MAX_SCALE_EXP or scale_exponent(h) > MAX_SCALE_EXP:
        raise ValueError(f"image of {h}x{w} is too large for index encoding")
    base = 10**l
    rows = np.arange(1, h + 1, dtype=np.int64)[:, None] * base
    cols = np.arange(1, w + 1, dtype=np.int64)[None, :]
    encoded = np.where(px != 0, rows + cols, 0).astype(np.int64)
    return IndexArray(encoded, l)


def decode_index(value: int, scale_exp: int) -> tuple[int, int]:
    """Inverse of the index encoding; returns ``(row, col)``."""
    if value <= 0:
        raise ValueError("0 is the background sentinel and encodes no coordinate")
    q, r = divmod(int(value), 10**scale_exp)
    if q < 1 or r < 1:
        raise ValueError(f"{value} is not a valid encoded index for scale 10**{scale_exp}")
    return q - 1, r - 1
