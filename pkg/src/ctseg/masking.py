"""Inner/outer masks, bidirectional mask propagation and hole restoration."""

from __future__ import annotations

import enum
from concurrent.futures import Executor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import PipelineError
from .grow import GrownRegion
from .raster import SKULL_THRESHOLD, CtDataset, threshold_skull

FOUR = ndimage.generate_binary_structure(2, 1)
EIGHT = ndimage.generate_binary_structure(2, 2)
MIN_AREA_FRACTION = 0.05


class MaskKind(enum.Enum):
    INNER = "inner"
    OUTER = "outer"


class Direction(enum.Enum):
    REFERENCE = "reference"
    FORWARD = "forward"
    BACKWARD = "backward"


@dataclass(frozen=True)
class Mask:
    kind: MaskKind
    support: np.ndarray
    origin_acq_index: int = 0

    @property
    def area(self) -> int:
        return int(np.count_nonzero(self.support))


@dataclass(frozen=True)
class SegmentedSlice:
    pixels: np.ndarray
    acq_index: int

    @property
    def area(self) -> int:
        return int(np.count_nonzero(self.pixels))


@dataclass(frozen=True)
class PropagationState:
    current_im: Mask
    reference_im_area: int
    direction: Direction = Direction.FORWARD
    reverted: bool = False


@dataclass
class StepRecord:
    """Per-slice bookkeeping, emitted as the mask-area CSV in debug runs."""

    acq_index: int
    direction: Direction
    im_area: int
    output_area: int
    reverted: bool


def enclosed_holes(support: np.ndarray) -> np.ndarray:
    """Background pixels not 4-connected to the image border."""
    background = ~support
    labels, count = ndimage.label(background, structure=FOUR)
    if count == 0:
        return np.zeros_like(support)
    border = np.unique(
        np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]])
    )
    outside = np.zeros(count + 1, dtype=bool)
    outside[border] = True
    return background & ~outside[labels]


def make_inner_mask(region: GrownRegion, origin_acq_index: int = 0) -> Mask:
    if region.area == 0:
        raise ValueError("grown region is empty")
    support = region.support | enclosed_holes(region.support)
    return Mask(MaskKind.INNER, support, origin_acq_index)


def default_um_radius(width: int) -> int:
    """10 px at 512 columns, scaled linearly with width."""
    return max(1, round(10 * width / 512))


def make_outer_mask(inner: Mask, dilation_radius: int) -> Mask:
    """Dilate the inner mask by a Euclidean disk (centre distance <= radius)."""
    if inner.kind is not MaskKind.INNER:
        raise ValueError("outer mask must be built from an inner mask")
    if dilation_radius < 1:
        raise ValueError(f"dilation radius must be >= 1, got {dilation_radius}")
    if inner.support.all():
        return Mask(MaskKind.OUTER, inner.support.copy(), inner.origin_acq_index)
    dist = ndimage.distance_transform_edt(~inner.support)
    return Mask(MaskKind.OUTER, dist <= dilation_radius, inner.origin_acq_index)


def apply_mask(img: np.ndarray, mask: Mask) -> np.ndarray:
    img = np.asarray(img)
    if img.shape != mask.support.shape:
        raise ValueError(f"shape mismatch: image {img.shape}, mask {mask.support.shape}")
    return np.where(mask.support, img, 0).astype(img.dtype)


def adjacent_include(
    masked: np.ndarray, um_masked_ti: np.ndarray, im: Mask | None = None
) -> np.ndarray:
    """Add every 8-connected blob of ``um_masked_ti`` touching the support of ``masked``."""
    masked = np.asarray(masked)
    um_masked_ti = np.asarray(um_masked_ti)
    if masked.shape != um_masked_ti.shape:
        raise ValueError(f"shape mismatch: {masked.shape} vs {um_masked_ti.shape}")
    support = masked != 0
    if not support.any():
        return masked.copy()
    labels, count = ndimage.label(um_masked_ti != 0, structure=EIGHT)
    touch = ndimage.binary_dilation(support, structure=EIGHT)
    keep = np.zeros(count + 1, dtype=bool)
    keep[np.unique(labels[touch])] = True
    keep[0] = False
    return np.where(support | keep[labels], np.where(support, masked, um_masked_ti), 0).astype(
        masked.dtype
    )


def update_im(state: PropagationState, segmented: np.ndarray) -> PropagationState:
    """New inner mask = nonzero support of the segmented slice, unless it is below 5% of the reference."""
    candidate = np.asarray(segmented) != 0
    if np.count_nonzero(candidate) < MIN_AREA_FRACTION * state.reference_im_area:
        return replace(state, reverted=True)
    if np.array_equal(candidate, state.current_im.support):
        return replace(state, reverted=False)
    new_im = Mask(MaskKind.INNER, candidate, state.current_im.origin_acq_index)
    return replace(state, current_im=new_im, reverted=False)


def fill_holes(segmented: np.ndarray, original, acq_index: int = 0) -> SegmentedSlice:
    """Copy original intensities into every zero region enclosed by the segmented support."""
    segmented = np.asarray(segmented)
    orig = original.pixels if hasattr(original, "pixels") else np.asarray(original)
    if segmented.shape != orig.shape:
        raise ValueError(f"shape mismatch: {segmented.shape} vs {orig.shape}")
    holes = enclosed_holes(segmented != 0)
    out = np.where(holes, orig, segmented).astype(np.uint8)
    return SegmentedSlice(out, acq_index)


def segment_slice(
    original: np.ndarray, ti: np.ndarray, im: Mask, um: Mask, acq_index: int = 0
) -> SegmentedSlice:
    """One slice: UM mask, IM mask, adjacent search, original intensities, hole fill."""
    um_ti = apply_mask(ti, um)
    masked = apply_mask(um_ti, im)
    included = adjacent_include(masked, um_ti, im)
    restored = np.where(included != 0, original, 0).astype(np.uint8)
    return fill_holes(restored, original, acq_index)


@dataclass
class _Batch:
    positions: list[int]
    direction: Direction
    outputs: dict[int, SegmentedSlice] = field(default_factory=dict)
    records: list[StepRecord] = field(default_factory=list)


def _run_batch(batch: _Batch, dataset: CtDataset, tis: Sequence[np.ndarray], im: Mask, um: Mask) -> _Batch:
    state = PropagationState(im, im.area, batch.direction)
    for pos in batch.positions:
        s = dataset[pos]
        try:
            seg = segment_slice(s.pixels, tis[pos], state.current_im, um, s.acq_index)
        except (ValueError, IndexError) as exc:
            raise PipelineError(str(exc), stage="segment", acq_index=s.acq_index) from exc
        im_area = state.current_im.area
        state = update_im(state, seg.pixels)
        batch.outputs[pos] = seg
        batch.records.append(StepRecord(s.acq_index, batch.direction, im_area, seg.area, state.reverted))
    return batch


def segment_dataset(
    dataset: CtDataset,
    ref_index: int,
    im: Mask,
    um: Mask,
    thresh: int = SKULL_THRESHOLD,
    tis: Sequence[np.ndarray] | None = None,
    executor: Executor | None = None,
    records: list[StepRecord] | None = None,
) -> list[SegmentedSlice]:
    """Segment every slice, propagating the inner mask away from the reference slice.

    ``ref_index`` is the reference slice's acq_index. Slices before it are
    processed from the reference outwards (backward batch), slices after it
    likewise (forward batch); both batches start from the reference inner
    mask. ``tis`` may carry precomputed threshold images.
    """
    ordered = dataset  # CtDataset guarantees ascending acq_index
    try:
        ref_pos = ordered.position_of(ref_index)
    except KeyError:
        raise PipelineError(f"reference acq_index {ref_index} not in dataset", stage="segment") from None
    if tis is None:
        tis = [threshold_skull(s.pixels, thresh) for s in ordered]

    ref = ordered[ref_pos]
    ref_out = segment_slice(ref.pixels, tis[ref_pos], im, um, ref.acq_index)

    backward = _Batch(list(range(ref_pos - 1, -1, -1)), Direction.BACKWARD)
    forward = _Batch(list(range(ref_pos + 1, len(ordered))), Direction.FORWARD)
    if executor is not None:
        futures = [executor.submit(_run_batch, b, ordered, tis, im, um) for b in (backward, forward)]
        for f in futures:
            f.result()
    else:
        for b in (backward, forward):
            _run_batch(b, ordered, tis, im, um)

    outputs = {ref_pos: ref_out, **backward.outputs, **forward.outputs}
    if records is not None:
        records.append(StepRecord(ref.acq_index, Direction.REFERENCE, im.area, ref_out.area, False))
        records.extend(backward.records)
        records.extend(forward.records)
    return [outputs[i] for i in range(len(ordered))]
