"""End-to-end segmentation of a dataset, batch runs on directories, benchmarking."""

from __future__ import annotations

import io
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager, nullcontext
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import CtSegError, PipelineError
from .grow import SeedPoint, find_seed, grow_floodfill, grow_splitquad
from .imageio import atomic_write_bytes, load_dataset, write_image
from .masking import (
    Mask,
    SegmentedSlice,
    StepRecord,
    default_um_radius,
    make_inner_mask,
    make_outer_mask,
    segment_dataset,
)
from .phantom import PhantomSpec, generate
from .raster import SKULL_THRESHOLD, CtDataset, GraySlice, binarize, threshold_skull
from .reference import CompactnessReport, select_reference

log = logging.getLogger(__name__)

STAGES = ("threshold", "reference", "seed", "grow", "masks", "segment")


@dataclass
class RunConfig:
    input_dir: Path | None = None
    output_dir: Path | None = None
    threshold: int = SKULL_THRESHOLD
    um_radius: int | None = None  # None: scaled from image width
    min_area: int = 0
    debug: bool = False
    threads: int = 1
    manifest: Path | None = None

    def validate(self) -> None:
        if not 1 <= self.threshold <= 255:
            raise ValueError(f"threshold must be in [1, 255], got {self.threshold}")
        if self.um_radius is not None and self.um_radius < 1:
            raise ValueError(f"UM radius must be >= 1, got {self.um_radius}")
        if self.min_area < 0:
            raise ValueError("min_area must be >= 0")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class Segmentation:
    """Everything the in-memory pipeline produced for one dataset."""

    outputs: list[SegmentedSlice]
    compactness: CompactnessReport
    seed: SeedPoint
    inner: Mask
    outer: Mask
    records: list[StepRecord]
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def reference_index(self) -> int:
        return self.compactness.chosen


@contextmanager
def _stage(name: str, timings: dict[str, float], acq_index: int | None = None):
    t0 = time.perf_counter()
    try:
        yield
    except CtSegError:
        raise
    except (ValueError, AssertionError, IndexError) as exc:
        raise PipelineError(str(exc), stage=name, acq_index=acq_index) from exc
    finally:
        timings[name] = timings.get(name, 0.0) + time.perf_counter() - t0


def segment(
    dataset: CtDataset,
    threshold: int = SKULL_THRESHOLD,
    um_radius: int | None = None,
    debug: bool = False,
    threads: int = 1,
) -> Segmentation:
    """Threshold, pick the reference slice, grow the masks and propagate them."""
    timings: dict[str, float] = {}
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    with pool or nullcontext():
        with _stage("threshold", timings):
            if pool is not None:
                tis = list(pool.map(lambda s: threshold_skull(s.pixels, threshold), dataset.slices))
            else:
                tis = [threshold_skull(s.pixels, threshold) for s in dataset]

        with _stage("reference", timings):
            ti_slices = [GraySlice(t, s.acq_index) for t, s in zip(tis, dataset)]
            report = select_reference(ti_slices, executor=pool)
        ref_pos = dataset.position_of(report.chosen)
        ref = dataset[ref_pos]
        log.info("reference slice %d (C=%.4f)", report.chosen, dict(report.per_slice)[report.chosen])

        with _stage("seed", timings, report.chosen):
            seed = find_seed(tis[ref_pos], check=debug)

        with _stage("grow", timings, report.chosen):
            b_ref = binarize(ref.pixels, threshold)
            region = grow_splitquad(b_ref, seed)
            if debug:
                oracle = grow_floodfill(b_ref, seed)
                if not np.array_equal(oracle.support, region.support):
                    raise AssertionError("split-and-grow and neighbour search disagree")

        with _stage("masks", timings, report.chosen):
            inner = make_inner_mask(region, report.chosen)
            radius = um_radius if um_radius is not None else default_um_radius(ref.width)
            outer = make_outer_mask(inner, radius)

        records: list[StepRecord] = []
        with _stage("segment", timings):
            outputs = segment_dataset(
                dataset, report.chosen, inner, outer, threshold, tis=tis, executor=pool, records=records
            )
    return Segmentation(outputs, report, seed, inner, outer, records, timings)


# ------------------------------------------------------------ directory runs


def output_name(slice_name: str | None, acq_index: int) -> str:
    if not slice_name:
        return f"slice_{acq_index:03d}_bm.pgm"
    p = Path(slice_name)
    suffix = p.suffix if p.suffix.lower() in (".pgm", ".png") else ".pgm"
    return f"{p.stem}_bm{suffix}"


def seed_overlay(pixels: np.ndarray, seed: SeedPoint) -> np.ndarray:
    """RGB copy of the slice with a red circled cross at the seed."""
    rgb = np.repeat(pixels[:, :, None], 3, axis=2).astype(np.uint8)
    h, w = pixels.shape
    r = max(3, round(min(h, w) / 40))
    rr, cc = np.ogrid[:h, :w]
    d2 = (rr - seed.row) ** 2 + (cc - seed.col) ** 2
    ring = (d2 <= r * r) & (d2 >= (r - 1) ** 2)
    cross = ((rr == seed.row) | (cc == seed.col)) & (d2 <= r * r)
    rgb[ring | cross] = (255, 0, 0)
    return rgb


def _write_debug(seg: Segmentation, dataset: CtDataset, out_dir: Path) -> None:
    atomic_write_bytes(out_dir / "compactness.csv", seg.compactness.to_csv().encode())
    ref = dataset[dataset.position_of(seg.reference_index)]
    stem = Path(ref.name).stem if ref.name else f"slice_{ref.acq_index:03d}"
    write_image(np.where(seg.inner.support, 255, 0).astype(np.uint8), out_dir / "im.png")
    write_image(np.where(seg.outer.support, 255, 0).astype(np.uint8), out_dir / "um.png")

    buf = io.BytesIO()
    Image.fromarray(seed_overlay(ref.pixels, seg.seed)).save(buf, format="PNG")
    atomic_write_bytes(out_dir / f"{stem}_seed.png", buf.getvalue())

    lines = ["acq_index,direction,im_area,output_area,reverted"]
    for r in sorted(seg.records, key=lambda r: r.acq_index):
        lines.append(f"{r.acq_index},{r.direction.value},{r.im_area},{r.output_area},{int(r.reverted)}")
    atomic_write_bytes(out_dir / "mask_areas.csv", ("\n".join(lines) + "\n").encode())


@dataclass
class RunResult:
    output_dir: Path
    files: list[Path]
    segmentation: Segmentation


def run_pipeline(config: RunConfig) -> RunResult:
    """Segment a slice directory and write ``<stem>_bm.<ext>`` files."""
    config.validate()
    in_dir = Path(config.input_dir)
    dataset = load_dataset(in_dir, config.manifest)
    out_dir = Path(config.output_dir) if config.output_dir else in_dir / "segmented"
    if out_dir.resolve() == in_dir.resolve():
        raise ValueError("output directory must differ from the input directory")
    out_dir.mkdir(parents=True, exist_ok=True)

    seg = segment(dataset, config.threshold, config.um_radius, config.debug, config.threads)

    files = []
    for s, out in zip(dataset, seg.outputs):
        files.append(write_image(out.pixels, out_dir / output_name(s.name, s.acq_index)))
    if config.debug:
        _write_debug(seg, dataset, out_dir)
    return RunResult(out_dir, files, seg)


# --------------------------------------------------------------------- bench


@dataclass
class BenchReport:
    slice_count: int
    shape: tuple[int, int]
    total_seconds: float
    stage_seconds: dict[str, float]
    floodfill_seconds: float
    splitquad_seconds: float
    nonzero_outputs: int

    def to_csv(self) -> str:
        rows = ["metric,value"]
        rows.append(f"slices,{self.slice_count}")
        rows.append(f"height,{self.shape[0]}")
        rows.append(f"width,{self.shape[1]}")
        rows.append(f"nonzero_outputs,{self.nonzero_outputs}")
        for name in STAGES:
            rows.append(f"stage_{name}_s,{self.stage_seconds.get(name, 0.0):.6f}")
        rows.append(f"total_s,{self.total_seconds:.6f}")
        rows.append(f"grow_floodfill_s,{self.floodfill_seconds:.6f}")
        rows.append(f"grow_splitquad_s,{self.splitquad_seconds:.6f}")
        return "\n".join(rows) + "\n"


def bench(config: RunConfig, spec: PhantomSpec) -> BenchReport:
    """Time in-memory segmentation of a generated phantom (no file I/O)."""
    config.validate()
    ph = generate(spec)
    t0 = time.perf_counter()
    seg = segment(ph.dataset, config.threshold, config.um_radius, False, config.threads)
    total = time.perf_counter() - t0

    ref = ph.dataset[ph.dataset.position_of(seg.reference_index)]
    b_ref = binarize(ref.pixels, config.threshold)
    t1 = time.perf_counter()
    grow_floodfill(b_ref, seg.seed)
    t2 = time.perf_counter()
    grow_splitquad(b_ref, seg.seed)
    t3 = time.perf_counter()
    return BenchReport(
        slice_count=len(ph.dataset),
        shape=ph.dataset.shape,
        total_seconds=total,
        stage_seconds=dict(seg.timings),
        floodfill_seconds=t2 - t1,
        splitquad_seconds=t3 - t2,
        nonzero_outputs=sum(1 for o in seg.outputs if o.area > 0),
    )
