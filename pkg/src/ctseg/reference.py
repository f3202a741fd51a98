"""Compactness measure and reference-slice selection."""

from __future__ import annotations

from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import PipelineError
from .raster import GraySlice, IndexArray, build_index_array


@dataclass(frozen=True)
class CompactnessReport:
    per_slice: tuple[tuple[int, float], ...]
    chosen: int

    def to_csv(self) -> str:
        lines = ["acq_index,C,chosen"]
        for acq, c in self.per_slice:
            lines.append(f"{acq},{c:.6f},{int(acq == self.chosen)}")
        return "\n".join(lines) + "\n"


def _inline_counts(ia: IndexArray) -> tuple[int, int]:
    """Row-wise and column-wise counts of pixels with an in-line nonzero neighbour."""
    p = ia.encoded
    # Differences of exactly 1 / 10**l only occur between two nonzero neighbours.
    right = np.diff(p, axis=1) == 1
    row_hit = np.zeros(p.shape, dtype=bool)
    row_hit[:, :-1] |= right
    row_hit[:, 1:] |= right

    down = np.diff(p, axis=0) == ia.base
    col_hit = np.zeros(p.shape, dtype=bool)
    col_hit[:-1, :] |= down
    col_hit[1:, :] |= down
    return int(row_hit.sum()), int(col_hit.sum())


def compactness(img) -> float:
    """Fraction of row and column positions whose nonzero pixel has a nonzero in-line neighbour.

    Computed through the index array, on the skull-stripped slice.
    """
    ia = build_index_array(img)
    c_rows, c_cols = _inline_counts(ia)
    n, m = ia.encoded.shape
    return (c_rows + c_cols) / (2.0 * n * m)


def select_reference(
    slices: Sequence[GraySlice], executor: Executor | None = None
) -> CompactnessReport:
    """Pick the thresholded slice with the highest compactness (ties: lowest acq_index)."""
    if not slices:
        raise PipelineError("dataset is empty", stage="select_reference")
    pixels = [s.pixels for s in slices]
    if executor is not None:
        values = list(executor.map(compactness, pixels))
    else:
        values = [compactness(p) for p in pixels]
    per_slice = tuple((s.acq_index, v) for s, v in zip(slices, values))
    best_acq, best_c = per_slice[0]
    for acq, c in per_slice[1:]:
        if c > best_c or (c == best_c and acq < best_acq):
            best_acq, best_c = acq, c
    if best_c == 0.0:
        raise PipelineError("empty dataset after thresholding", stage="select_reference")
    return CompactnessReport(per_slice, best_acq)
