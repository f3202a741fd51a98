"""8-bit grayscale image files (binary PGM, PNG) and dataset loading."""

from __future__ import annotations

import io
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
from PIL import Image

from .errors import DataError, ImageFormatError
from .raster import CtDataset, GraySlice

IMAGE_SUFFIXES = (".pgm", ".png")
MANIFEST_NAME = "manifest.txt"
PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


# ---------------------------------------------------------------- PGM (P5)


def _parse_pgm(data: bytes, path) -> np.ndarray:
    if data[:2] != b"P5":
        raise ImageFormatError(f"{path}: not a binary PGM (magic {data[:2]!r})")
    pos = 2
    fields = []
    for name in ("width", "height", "maxval"):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise ImageFormatError(f"{path}: truncated header, missing {name} at byte offset {pos}")
        tok = m.group(1)
        if not tok.isdigit():
            raise ImageFormatError(f"{path}: bad {name} {tok!r} at byte offset {m.start(1)}")
        fields.append(int(tok))
        pos = m.end(1)
    width, height, maxval = fields
    header = data[:pos]
    if maxval > 255:
        raise ImageFormatError(
            f"{path}: unsupported bit depth, maxval {maxval} (header {header!r}); only 8-bit is supported"
        )
    if width < 1 or height < 1 or maxval < 1:
        raise ImageFormatError(f"{path}: invalid header {header!r}")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise ImageFormatError(f"{path}: missing separator after header at byte offset {pos}")
    start = pos + 1
    need = width * height
    if len(data) - start < need:
        raise ImageFormatError(
            f"{path}: truncated pixel data, expected {need} bytes from byte offset {start}, "
            f"file ends at byte offset {len(data)}"
        )
    return np.frombuffer(data, dtype=np.uint8, count=need, offset=start).reshape(height, width).copy()


def _encode_pgm(pixels: np.ndarray) -> bytes:
    h, w = pixels.shape
    return b"P5\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(pixels, dtype=np.uint8).tobytes()


# ---------------------------------------------------------------------- PNG


def _read_png(path: Path, data: bytes) -> np.ndarray:
    if len(data) < 26:
        raise ImageFormatError(f"{path}: truncated PNG header at byte offset {len(data)}")
    bit_depth, color_type = data[24], data[25]
    if color_type != 0:
        raise ImageFormatError(
            f"{path}: not a grayscale PNG (IHDR color type byte {color_type:#04x} at offset 25)"
        )
    if bit_depth != 8:
        raise ImageFormatError(
            f"{path}: unsupported bit depth {bit_depth} (IHDR byte {bit_depth:#04x} at offset 24)"
        )
    try:
        with Image.open(path) as im:
            im.load()
            return np.array(im, dtype=np.uint8)
    except (OSError, SyntaxError, ValueError) as exc:
        raise ImageFormatError(f"{path}: malformed PNG ({exc}); file is {len(data)} bytes") from exc


# ------------------------------------------------------------------- public


def read_image(path, acq_index: int = 0) -> GraySlice:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if data.startswith(PNG_SIGNATURE):
        px = _read_png(path, data)
    elif data[:1] == b"P":
        px = _parse_pgm(data, path)
    else:
        raise ImageFormatError(f"{path}: unrecognised image format (leading bytes {data[:8]!r})")
    return GraySlice(px, acq_index=acq_index, name=path.name)


def atomic_write_bytes(path: Path, payload: bytes) -> None:
    """Write via a temporary file in the same directory, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_image(img, path) -> Path:
    """Write an 8-bit grayscale raster; the suffix picks PGM or PNG."""
    path = Path(path)
    px = img.pixels if isinstance(img, GraySlice) else np.asarray(img)
    if px.ndim != 2:
        raise ValueError(f"expected a 2D raster, got shape {px.shape}")
    px = px.astype(np.uint8, copy=False)
    suffix = path.suffix.lower()
    try:
        if suffix == ".pgm":
            atomic_write_bytes(path, _encode_pgm(px))
        elif suffix == ".png":
            buf = io.BytesIO()
            Image.fromarray(px).save(buf, format="PNG")
            atomic_write_bytes(path, buf.getvalue())
        else:
            raise ValueError(f"unsupported image suffix {path.suffix!r}")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc
    return path


# ----------------------------------------------------------------- manifest


@dataclass(frozen=True)
class ManifestEntry:
    acq_index: int
    filename: str
    truth: str | None = None


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]
    root: Path

    def resolve(self, name: str) -> Path:
        path = (self.root / name).resolve()
        if not path.is_relative_to(self.root.resolve()):
            raise DataError(f"manifest entry {name!r} escapes {self.root}")
        return path


def read_manifest(path, root=None) -> DatasetManifest:
    """Parse ``acq_index<TAB>filename[<TAB>truth]`` lines; entries come back sorted."""
    path = Path(path)
    root = Path(root) if root is not None else path.parent
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc
    entries = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) not in (2, 3):
            raise DataError(f"{path}:{lineno}: expected 'acq_index<TAB>filename[<TAB>truth]'")
        try:
            acq = int(parts[0])
        except ValueError:
            raise DataError(f"{path}:{lineno}: bad acq_index {parts[0]!r}") from None
        if acq < 0:
            raise DataError(f"{path}:{lineno}: acq_index must be nonnegative")
        entries.append(ManifestEntry(acq, parts[1], parts[2] if len(parts) == 3 else None))
    if not entries:
        raise DataError(f"manifest {path} lists no slices")
    entries.sort(key=lambda e: e.acq_index)
    for a, b in zip(entries, entries[1:]):
        if a.acq_index == b.acq_index:
            raise DataError(f"{path}: duplicate acq_index {a.acq_index}")
    man = DatasetManifest(tuple(entries), root)
    for e in entries:
        man.resolve(e.filename)
    return man


def write_manifest(path, entries: Iterable[tuple]) -> Path:
    lines = ["\t".join(str(x) for x in e if x is not None) for e in entries]
    atomic_write_bytes(Path(path), ("\n".join(lines) + "\n").encode())
    return Path(path)


def image_files(directory) -> list[Path]:
    directory = Path(directory)
    return sorted(
        p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )


def load_dataset(directory, manifest=None) -> CtDataset:
    """Load a slice directory.

    Order comes from the manifest (explicit, or ``manifest.txt`` inside the
    directory); without one, files are taken in name order and numbered by
    rank. Each slice's ``name`` is its file name.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"{directory} is not a directory")
    if manifest is None and (directory / MANIFEST_NAME).is_file():
        manifest = directory / MANIFEST_NAME

    if manifest is not None:
        man = read_manifest(manifest, root=directory)
        pairs = [(e.acq_index, man.resolve(e.filename)) for e in man.entries]
    else:
        files = image_files(directory)
        if not files:
            raise DataError(f"{directory} contains no .pgm or .png images")
        pairs = list(enumerate(files))

    slices = []
    for acq, path in pairs:
        if not path.is_file():
            raise DataError(f"manifest entry {path} does not exist")
        slices.append(read_image(path, acq_index=acq))
    shape = slices[0].shape
    for s, (_, path) in zip(slices, pairs):
        if s.shape != shape:
            raise DataError(f"{path.name} is {s.width}x{s.height}, expected {shape[1]}x{shape[0]}")
    return CtDataset(slices, str(directory))
