"""``ctseg`` command line: run, phantom, eval, bench.

Exit codes: 0 success, 1 usage error, 2 data error, 3 pipeline failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import DataError, PipelineError
from .evaluation import classify_slices, compute_report, format_csv, format_table
from .imageio import MANIFEST_NAME, atomic_write_bytes, image_files, read_image, read_manifest
from .phantom import Calcification, PhantomSpec, generate, write_phantom
from .pipeline import RunConfig, bench, output_name, run_pipeline

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_PIPELINE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _pair(text: str, cast=int) -> tuple:
    try:
        a, b = (cast(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated values, got {text!r}") from None
    return a, b


def _add_spec_flags(p: argparse.ArgumentParser, slices: int) -> None:
    g = p.add_argument_group("phantom")
    g.add_argument("--slices", type=int, default=slices, help="number of slices")
    g.add_argument("--width", type=int, default=512)
    g.add_argument("--height", type=int, default=512)
    g.add_argument("--seed", type=int, default=0, help="RNG seed")
    g.add_argument("--skull-range", type=_pair, default=(240, 255), metavar="LO,HI")
    g.add_argument("--brain-range", type=_pair, default=(20, 200), metavar="LO,HI")
    g.add_argument("--no-headrest", action="store_true")
    g.add_argument("--nasal-slices", type=int, default=2)
    g.add_argument("--empty-slices", type=int, default=2, help="terminal slices without brain")
    g.add_argument("--calc-slice", type=int, help="slice index of a calcification")
    g.add_argument("--calc-radius", type=float, default=None)
    g.add_argument("--calc-intensity", type=int, default=250)
    g.add_argument("--calc-center", type=lambda t: _pair(t, float), metavar="ROW,COL")


def _spec_from_args(args) -> PhantomSpec:
    calc = None
    if args.calc_slice is not None:
        radius = args.calc_radius if args.calc_radius is not None else max(1.0, 6 * args.width / 512)
        calc = Calcification(args.calc_slice, radius, args.calc_intensity, args.calc_center)
    return PhantomSpec(
        slice_count=args.slices,
        width=args.width,
        height=args.height,
        rng_seed=args.seed,
        skull_intensity_range=tuple(args.skull_range),
        brain_intensity_range=tuple(args.brain_range),
        calcification=calc,
        headrest=not args.no_headrest,
        nasal_slices=args.nasal_slices,
        empty_terminal_slices=args.empty_slices,
    )


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threshold", type=int, default=240)
    p.add_argument("--um-radius", type=int, default=None, help="outer-mask dilation radius (px)")
    p.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ctseg", description="Automatic brain-matter segmentation for multislice CT.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="segment a directory of slices")
    p.add_argument("dir", type=Path)
    p.add_argument("--out", type=Path, default=None, help="output directory (default: DIR/segmented)")
    _add_run_flags(p)
    p.add_argument("--min-area", type=int, default=0)
    p.add_argument("--manifest", type=Path, default=None)
    p.add_argument("--debug", action="store_true", help="write intermediate products and cross-check growth")

    p = sub.add_parser("phantom", help="write a synthetic dataset with ground truth")
    p.add_argument("dir", type=Path)
    _add_spec_flags(p, slices=24)
    p.add_argument("--format", choices=("pgm", "png"), default="pgm")
    p.add_argument("--shuffle-names", action="store_true", help="number files out of acquisition order")

    p = sub.add_parser("eval", help="slice-level evaluation against ground truth")
    p.add_argument("results", type=Path)
    p.add_argument("truth", type=Path, help="truth directory or manifest with a truth column")
    p.add_argument("--min-area", type=int, default=0)
    p.add_argument("--csv", type=Path, default=None, help="CSV path (default: RESULTS/eval.csv)")
    p.add_argument("--label", default="1", help="dataset label for the report row")

    p = sub.add_parser("bench", help="time segmentation of an in-memory phantom")
    _add_spec_flags(p, slices=34)
    _add_run_flags(p)
    p.add_argument("--csv", type=Path, default=None, help="also write the CSV here")
    return parser


# ------------------------------------------------------------------ commands


def _cmd_run(args) -> int:
    cfg = RunConfig(
        input_dir=args.dir,
        output_dir=args.out,
        threshold=args.threshold,
        um_radius=args.um_radius,
        min_area=args.min_area,
        debug=args.debug,
        threads=args.threads,
        manifest=args.manifest,
    )
    try:
        cfg.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    res = run_pipeline(cfg)
    seg = res.segmentation
    nonzero = sum(1 for o in seg.outputs if o.area > cfg.min_area)
    print(
        f"reference slice {seg.reference_index}, seed ({seg.seed.row}, {seg.seed.col}); "
        f"{len(res.files)} slices written to {res.output_dir} ({nonzero} with brain matter)"
    )
    return EXIT_OK


def _cmd_phantom(args) -> int:
    ph = generate(_spec_from_args(args))
    path = write_phantom(ph, args.dir, fmt=args.format, shuffle_names=args.shuffle_names)
    print(f"{len(ph.dataset)} slices written, manifest {path}, peak slice {ph.peak_index}")
    return EXIT_OK


def _find_result(results: Path, name: str, acq_index: int) -> Path:
    want = output_name(name, acq_index)
    stem = Path(want).stem
    for cand in (results / want, results / f"{stem}.pgm", results / f"{stem}.png"):
        if cand.is_file():
            return cand
    raise DataError(f"no segmented output for {name} in {results}")


def _eval_pairs(results: Path, truth: Path) -> list[tuple[Path, Path]]:
    if truth.is_dir() and (truth / MANIFEST_NAME).is_file():
        truth = truth / MANIFEST_NAME
    if truth.is_file():
        man = read_manifest(truth)
        pairs = []
        for e in man.entries:
            if e.truth is None:
                raise DataError(f"{truth}: entry {e.acq_index} has no truth column")
            pairs.append((_find_result(results, e.filename, e.acq_index), man.resolve(e.truth)))
        return pairs
    if not truth.is_dir():
        raise DataError(f"{truth} is neither a directory nor a manifest")
    files = image_files(truth)
    if not files:
        raise DataError(f"{truth} contains no truth images")
    return [(_find_result(results, f.name, i), f) for i, f in enumerate(files)]


def _cmd_eval(args) -> int:
    if args.min_area < 0:
        raise UsageError("--min-area must be >= 0")
    if not args.results.is_dir():
        raise DataError(f"{args.results} is not a directory")
    outputs, truth = [], []
    for res_path, truth_path in _eval_pairs(args.results, args.truth):
        outputs.append(read_image(res_path).pixels)
        truth.append(read_image(truth_path).pixels != 0)
    try:
        counts = classify_slices(outputs, truth, args.min_area)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    row = compute_report(counts).row(args.label)
    sys.stdout.write(format_table([row]))
    csv_path = args.csv or args.results / "eval.csv"
    atomic_write_bytes(csv_path, format_csv([row]).encode())
    return EXIT_OK


def _cmd_bench(args) -> int:
    cfg = RunConfig(threshold=args.threshold, um_radius=args.um_radius, threads=args.threads)
    try:
        cfg.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = bench(cfg, _spec_from_args(args))
    text = report.to_csv()
    sys.stdout.write(text)
    if args.csv:
        atomic_write_bytes(args.csv, text.encode())
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "phantom": _cmd_phantom, "eval": _cmd_eval, "bench": _cmd_bench}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ctseg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PipelineError as exc:
        print(f"ctseg: pipeline failure: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    except (DataError, OSError) as exc:
        print(f"ctseg: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"ctseg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
