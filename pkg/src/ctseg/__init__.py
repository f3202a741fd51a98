"""Automatic brain-matter segmentation for multislice head CT."""

from .errors import CtSegError, DataError, ImageFormatError, PipelineError
from .evaluation import EvalCounts, EvalReport, classify_slices, compute_report
from .grow import GrownRegion, SeedPoint, find_seed, grow_floodfill, grow_splitquad
from .imageio import load_dataset, read_image, write_image
from .masking import (
    Mask,
    MaskKind,
    PropagationState,
    SegmentedSlice,
    adjacent_include,
    apply_mask,
    fill_holes,
    make_inner_mask,
    make_outer_mask,
    segment_dataset,
    update_im,
)
from .phantom import Calcification, PhantomSpec, generate, write_phantom
from .pipeline import RunConfig, bench, run_pipeline, segment
from .raster import (
    CtDataset,
    GraySlice,
    IndexArray,
    binarize,
    build_index_array,
    decode_index,
    threshold_skull,
)
from .reference import CompactnessReport, compactness, select_reference

__version__ = "0.1.0"
