"""Automatic seed selection and region growing on the binary reference slice."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .raster import build_index_array, decode_index


class SeedPoint(NamedTuple):
    row: int
    col: int


@dataclass(frozen=True)
class GrownRegion:
    support: np.ndarray  # bool, same shape as the binary slice
    seed: SeedPoint

    @property
    def area(self) -> int:
        return int(self.support.sum())


# ---------------------------------------------------------------- seed point


def _lower_median(sorted_values: np.ndarray):
    return sorted_values[(len(sorted_values) - 1) // 2]


def median_seed_by_coordinates(ti: np.ndarray) -> SeedPoint:
    rows, cols = np.nonzero(ti)
    if rows.size == 0:
        raise ValueError("cannot place a seed on an all-zero slice")
    return SeedPoint(int(_lower_median(np.sort(rows))), int(_lower_median(np.sort(cols))))


def median_seed_by_index_array(ti: np.ndarray) -> SeedPoint:
    """Median through the sorted index array, once per orientation.

    The encoding is lexicographic in (row, col), so the median encoded value
    decodes to the median row; on the transposed raster it yields the median
    column.
    """
    ia = build_index_array(ti)
    values = ia.nonzero_values()
    if values.size == 0:
        raise ValueError("cannot place a seed on an all-zero slice")
    row, _ = decode_index(int(_lower_median(values)), ia.scale_exp)

    ia_t = build_index_array(np.ascontiguousarray(ti.T))
    col, _ = decode_index(int(_lower_median(ia_t.nonzero_values())), ia_t.scale_exp)
    return SeedPoint(row, col)


def _nearest_nonzero(ti: np.ndarray, target: SeedPoint) -> SeedPoint:
    if ti[target]:
        return target
    rows, cols = np.nonzero(ti)
    d2 = (rows - target.row) ** 2 + (cols - target.col) ** 2
    best = np.lexsort((cols, rows, d2))[0]
    return SeedPoint(int(rows[best]), int(cols[best]))


def find_seed(ti: np.ndarray, check: bool = True) -> SeedPoint:
    """Seed at the per-axis median of nonzero pixels, moved to the nearest nonzero pixel if needed.

    With ``check`` the index-array route is computed as well and must agree
    with the plain coordinate median.
    """
    ti = np.asarray(ti)
    seed = median_seed_by_index_array(ti)
    if check:
        direct = median_seed_by_coordinates(ti)
        if direct != seed:
            raise AssertionError(f"seed paths disagree: index array {seed}, coordinates {direct}")
    return _nearest_nonzero(ti, seed)


# ------------------------------------------------------------ region growing


def _check_seed(binary: np.ndarray, seed: SeedPoint) -> None:
    h, w = binary.shape
    if not (0 <= seed.row < h and 0 <= seed.col < w):
        raise ValueError(f"seed {tuple(seed)} outside {h}x{w} image")
    if binary[seed.row, seed.col] != 0:
        raise ValueError(f"seed {tuple(seed)} lies on a boundary (255) pixel")


def grow_floodfill(binary: np.ndarray, seed: SeedPoint) -> GrownRegion:
    """Neighbour-search growth: every 0 pixel 8-connected to the seed.

    Keeps a growing list of visited flat indices and inspects the eight
    neighbours of each entry in turn.
    """
    binary = np.asarray(binary)
    seed = SeedPoint(*seed)
    _check_seed(binary, seed)
    h, w = binary.shape
    open_ = (binary == 0).ravel().tolist()
    inside = [False] * (h * w)

    start = seed.row * w + seed.col
    grown = [start]
    inside[start] = True
    k = 0
    while k < len(grown):
        p = grown[k]
        k += 1
        r, c = divmod(p, w)
        for dr in (-1, 0, 1):
            rr = r + dr
            if rr < 0 or rr >= h:
                continue
            base = rr * w
            for dc in (-1, 0, 1):
                cc = c + dc
                if cc < 0 or cc >= w:
                    continue
                q = base + cc
                if open_[q] and not inside[q]:
                    inside[q] = True
                    grown.append(q)

    support = np.zeros(h * w, dtype=bool)
    support[grown] = True
    return GrownRegion(support.reshape(h, w), seed)


def _spread_along_runs(open_line: np.ndarray, seeds: np.ndarray) -> np.ndarray:
    """Mark every run of open pixels that contains at least one seed."""
    run_id = np.cumsum(~open_line)
    hit = np.zeros(run_id[-1] + 2, dtype=bool)
    hit[run_id[seeds]] = True
    return open_line & hit[run_id]


def _line_pass(open_: np.ndarray, marked: np.ndarray, lines, lo: int, hi: int) -> bool:
    """Sweep ``lines`` (row indices, in order) of the block ``[:, lo:hi]``.

    Works on the row axis; column passes call it on transposed views. A pixel
    is seeded when it is open and 8-adjacent to a marked pixel, including
    pixels just across the block edge, which is how marks cross the split
    axes between sub-images.
    """
    n, m = marked.shape
    e_lo, e_hi = max(lo - 1, 0), min(hi + 1, m)
    changed = False
    for i in lines:
        o = open_[i, lo:hi]
        if not o.any():
            continue
        nb = marked[i, e_lo:e_hi].copy()
        if i > 0:
            nb |= marked[i - 1, e_lo:e_hi]
        if i + 1 < n:
            nb |= marked[i + 1, e_lo:e_hi]
        grown = nb.copy()
        grown[1:] |= nb[:-1]
        grown[:-1] |= nb[1:]
        seeds = o & grown[lo - e_lo : lo - e_lo + (hi - lo)]
        if not seeds.any():
            continue
        new = _spread_along_runs(o, seeds)
        row = marked[i, lo:hi]
        if (new & ~row).any():
            row |= new
            changed = True
    return changed


def grow_splitquad(binary: np.ndarray, seed: SeedPoint) -> GrownRegion:
    """Split-and-grow: four sub-images around the seed, scanline marking in each.

    The image is split at the seed row and column. Each sub-image starts from
    the global seed or its corner nearest to it and is swept row-wise then
    column-wise, moving away from the seed. Sweeps repeat until nothing new is
    marked, so concave regions are filled completely. The result equals
    :func:`grow_floodfill`.
    """
    binary = np.asarray(binary)
    seed = SeedPoint(*seed)
    _check_seed(binary, seed)
    n, m = binary.shape
    r0, c0 = seed
    open_ = binary == 0
    marked = np.zeros((n, m), dtype=bool)
    marked[r0, c0] = True

    # (row range in sweep order, col range in sweep order) per sub-image
    top, bottom = list(range(r0, -1, -1)), list(range(r0 + 1, n))
    left, right = list(range(c0, -1, -1)), list(range(c0 + 1, m))
    quads = [(rs, cs) for rs in (top, bottom) for cs in (left, right) if rs and cs]

    # local seeds: corners adjacent to the global seed
    for rs, cs in quads:
        r, c = rs[0], cs[0]
        if open_[r, c]:
            marked[r, c] = True

    open_t, marked_t = open_.T, marked.T
    changed = True
    while changed:
        changed = False
        for rs, cs in quads:
            c_lo, c_hi = min(cs), max(cs) + 1
            r_lo, r_hi = min(rs), max(rs) + 1
            changed |= _line_pass(open_, marked, rs, c_lo, c_hi)
            changed |= _line_pass(open_t, marked_t, cs, r_lo, r_hi)

    return GrownRegion(marked, seed)
