"""Synthetic head-CT datasets with pixel-exact ground truth.

Each slice has an elliptical skull ring around a textured brain interior.
The brain cross-section grows to a single peak slice and shrinks again.
Options add a calcification disk, a headrest bar, nasal slices (facial
bone with soft-tissue cores, brain split into two lobes) and empty terminal
slices (skull cap on top, nothing but headrest at the bottom).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import DataError
from .imageio import atomic_write_bytes, write_image, write_manifest
from .raster import CtDataset, GraySlice

F_MIN = 0.35
BRAIN_ROWS = 0.31  # semi-axis / height at the peak slice
BRAIN_COLS = 0.27  # semi-axis / width at the peak slice


@dataclass(frozen=True)
class Calcification:
    slice_index: int
    radius: float
    intensity: int = 250
    center: tuple[float, float] | None = None  # default: offset from brain centre


@dataclass(frozen=True)
class PhantomSpec:
    slice_count: int = 24
    width: int = 512
    height: int = 512
    rng_seed: int = 0
    skull_intensity_range: tuple[int, int] = (240, 255)
    brain_intensity_range: tuple[int, int] = (20, 200)
    calcification: Calcification | None = None
    headrest: bool = True
    nasal_slices: int = 2
    empty_terminal_slices: int = 2

    def validate(self) -> None:
        if self.slice_count < 1:
            raise DataError("slice_count must be >= 1")
        if self.width < 8 or self.height < 8:
            raise DataError("phantom slices must be at least 8x8")
        lo, hi = self.skull_intensity_range
        if not 240 <= lo <= hi <= 255:
            raise DataError("skull intensities must lie in [240, 255]")
        lo, hi = self.brain_intensity_range
        if not 1 <= lo <= hi < 240:
            raise DataError("brain intensities must lie in [1, 239]")
        if self.empty_terminal_slices < 0 or self.nasal_slices < 0:
            raise DataError("slice counts must be nonnegative")
        content = self.slice_count - self.empty_terminal_slices
        if content < 1:
            raise DataError("at least one slice must contain brain")
        if self.nasal_slices >= content and content > 1:
            raise DataError("nasal slices must leave at least one plain brain slice")
        c = self.calcification
        if c is not None:
            if not 0 <= c.slice_index < self.slice_count:
                raise DataError(f"calcification slice {c.slice_index} out of range")
            if not 241 <= c.intensity <= 255:
                raise DataError("calcification intensity must lie in [241, 255]")
            if c.radius <= 0:
                raise DataError("calcification radius must be positive")


@dataclass
class PhantomDataset:
    spec: PhantomSpec
    dataset: CtDataset
    truth: list[np.ndarray]  # bool rasters
    calcification_mask: np.ndarray | None = None
    peak_index: int = 0
    manifest: dict = field(default_factory=dict)


def _layout(spec: PhantomSpec) -> tuple[list[str], int]:
    """Role of each slice ('bottom', 'nasal', 'brain', 'cap') and the peak slice."""
    n = spec.slice_count
    n_top = (spec.empty_terminal_slices + 1) // 2
    n_bottom = spec.empty_terminal_slices - n_top
    roles = ["bottom"] * n_bottom
    content = n - spec.empty_terminal_slices
    n_nasal = min(spec.nasal_slices, content - 1)
    roles += ["nasal"] * n_nasal + ["brain"] * (content - n_nasal) + ["cap"] * n_top
    first = n_bottom + n_nasal
    last = n_bottom + content - 1
    lo = first + (last - first) // 3
    hi = last - (last - first) // 3
    rng = np.random.default_rng([spec.rng_seed, 7])
    peak = int(rng.integers(lo, hi + 1))
    return roles, peak


def _ellipse_q(shape, center, semi) -> np.ndarray:
    rr, cc = np.ogrid[: shape[0], : shape[1]]
    return ((rr - center[0]) / semi[0]) ** 2 + ((cc - center[1]) / semi[1]) ** 2


def _disk(shape, center, radius) -> np.ndarray:
    rr, cc = np.ogrid[: shape[0], : shape[1]]
    return (rr - center[0]) ** 2 + (cc - center[1]) ** 2 <= radius**2


class _Geometry:
    def __init__(self, spec: PhantomSpec):
        h, w = spec.height, spec.width
        rng = np.random.default_rng([spec.rng_seed, 11])
        self.shape = (h, w)
        self.center = (h / 2 + rng.uniform(-0.01, 0.01) * h, w / 2 + rng.uniform(-0.01, 0.01) * w)
        self.semi = (BRAIN_ROWS * h, BRAIN_COLS * w)
        self.thick = max(2, round(0.02 * min(h, w)))

    def brain_semi(self, f: float) -> tuple[float, float]:
        return (max(1.5, self.semi[0] * f), max(1.5, self.semi[1] * f))

    def brain(self, f: float) -> np.ndarray:
        return _ellipse_q(self.shape, self.center, self.brain_semi(f)) < 1.0

    def skull_outer(self, f: float) -> np.ndarray:
        a, b = self.brain_semi(f)
        return _ellipse_q(self.shape, self.center, (a + self.thick, b + self.thick)) < 1.0

    def septum(self, f: float) -> np.ndarray:
        half = max(1, self.thick // 4)
        cc = np.arange(self.shape[1])
        cols = np.abs(cc - round(self.center[1])) <= half
        return self.brain(f) & cols[None, :]

    def facial_bones(self, f: float) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.brain_semi(f)
        radius = max(2.0, 0.06 * min(self.shape))
        bone = np.zeros(self.shape, dtype=bool)
        core = np.zeros(self.shape, dtype=bool)
        for side in (-1, 1):
            theta = np.deg2rad(90 + side * 35)
            # point on the outer skull boundary, anterior (upper) half
            r_out = (a + self.thick) * np.sin(theta)
            c_out = (b + self.thick) * np.cos(theta)
            d = np.hypot(r_out, c_out)
            scale = (d + 0.9 * radius) / d
            cen = (self.center[0] - r_out * scale, self.center[1] + c_out * scale)
            bone |= _disk(self.shape, cen, radius)
            core |= _disk(self.shape, cen, 0.4 * radius)
        return bone, core

    def headrest(self) -> np.ndarray:
        h, w = self.shape
        out = np.zeros(self.shape, dtype=bool)
        out[int(0.91 * h) : int(np.ceil(0.95 * h)), int(0.2 * w) : int(np.ceil(0.8 * w))] = True
        return out


def _profile(spec: PhantomSpec, geo: _Geometry, roles: list[str], peak: int) -> np.ndarray:
    content = [i for i, r in enumerate(roles) if r in ("nasal", "brain")]
    f = np.zeros(spec.slice_count)
    span = max(peak - content[0], content[-1] - peak) + 1
    for i in content:
        f[i] = F_MIN + (1 - F_MIN) * (1 - abs(i - peak) / span)
    # cap slices use a small solid bone disk, sized like the first-removed brain
    for i, r in enumerate(roles):
        if r == "cap":
            f[i] = F_MIN * 0.8

    # strict, comfortable maximum at the peak slice
    others = [i for i in content if i != peak]
    if others:
        second = max(int(geo.brain(f[i]).sum()) for i in others)
        calc = spec.calcification
        calc_area = np.pi * calc.radius**2 if calc is not None else 0.0
        margin = max(8.0, 0.02 * second) + 2 * calc_area
        while geo.brain(f[peak]).sum() < second + margin:
            f[peak] += 0.005
    return f


def generate(spec: PhantomSpec) -> PhantomDataset:
    """Build a deterministic phantom; the same ``rng_seed`` gives bit-identical output."""
    spec.validate()
    geo = _Geometry(spec)
    roles, peak = _layout(spec)
    f = _profile(spec, geo, roles, peak)
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(spec.rng_seed).spawn(spec.slice_count)]
    h, w = geo.shape
    s_lo, s_hi = spec.skull_intensity_range
    b_lo, b_hi = spec.brain_intensity_range

    headrest = geo.headrest() if spec.headrest else None
    calc_mask = None
    slices, truth, summary = [], [], []
    for i, role in enumerate(roles):
        rng = rngs[i]
        img = np.zeros((h, w), dtype=np.uint8)
        t = np.zeros((h, w), dtype=bool)

        if role in ("nasal", "brain"):
            brain = geo.brain(f[i])
            outer = geo.skull_outer(f[i])
            skull = outer & ~brain
            bone = skull.copy()
            if role == "nasal":
                bones, core = geo.facial_bones(f[i])
                bone |= (bones | geo.septum(f[i])) & ~core
            t = brain & ~bone

            # brain texture: smooth base level plus pixel noise, CSF pockets darker
            base = rng.uniform(max(b_lo, 60), min(b_hi, 120))
            tex = base + rng.normal(0.0, 8.0, size=(h, w))
            img[t] = np.clip(np.rint(tex[t]), max(b_lo, 40), b_hi).astype(np.uint8)
            a, b = geo.brain_semi(f[i])
            if min(a, b) >= 12:
                for _ in range(int(rng.integers(0, 3))):
                    off = (rng.uniform(-0.4, 0.4) * a, rng.uniform(-0.4, 0.4) * b)
                    pocket = _ellipse_q(
                        geo.shape,
                        (geo.center[0] + off[0], geo.center[1] + off[1]),
                        (rng.uniform(0.08, 0.15) * a, rng.uniform(0.05, 0.1) * b),
                    ) < 1.0
                    pocket &= t
                    img[pocket] = rng.integers(b_lo, min(b_lo + 20, b_hi) + 1, size=int(pocket.sum()))
            img[bone] = rng.integers(s_lo, s_hi + 1, size=int(bone.sum()))
            if role == "nasal":
                img[core] = rng.integers(60, 121, size=int(core.sum()))
        elif role == "cap":
            cap = geo.brain(f[i])
            img[cap] = rng.integers(s_lo, s_hi + 1, size=int(cap.sum()))

        c = spec.calcification
        if c is not None and c.slice_index == i:
            if not t.any():
                raise DataError(f"calcification slice {i} has no intracranial region")
            a, b = geo.brain_semi(f[i])
            cen = c.center or (geo.center[0] + 0.3 * a, geo.center[1] - 0.25 * b)
            disk = _disk(geo.shape, cen, c.radius)
            inner = ndimage.binary_erosion(t, structure=np.ones((3, 3), dtype=bool))
            if not disk.any() or (disk & ~inner).any():
                raise DataError(f"calcification does not fit inside the brain of slice {i}")
            img[disk] = c.intensity
            calc_mask = disk

        if headrest is not None:
            if (ndimage.binary_dilation(headrest, structure=np.ones((3, 3), dtype=bool)) & (img != 0)).any():
                raise DataError("headrest touches the head; use a larger image or disable it")
            img[headrest] = rng.integers(150, 201, size=int(headrest.sum()))

        slices.append(GraySlice(img, acq_index=i, name=f"slice_{i:03d}"))
        truth.append(t)
        summary.append({"acq_index": i, "role": role, "truth_area": int(t.sum())})

    manifest = {
        "spec": _spec_dict(spec),
        "peak_index": peak,
        "slices": summary,
    }
    return PhantomDataset(spec, CtDataset(slices, f"phantom-{spec.rng_seed}"), truth, calc_mask, peak, manifest)


def _spec_dict(spec: PhantomSpec) -> dict:
    d = asdict(spec)
    d["skull_intensity_range"] = list(spec.skull_intensity_range)
    d["brain_intensity_range"] = list(spec.brain_intensity_range)
    return d


def write_phantom(ph: PhantomDataset, directory, fmt: str = "pgm", shuffle_names: bool = False) -> Path:
    """Write slices, truth rasters (under ``truth/``), ``manifest.txt`` and ``phantom.json``.

    With ``shuffle_names`` the file numbering is a permutation of the
    acquisition order, so only the manifest recovers the right sequence.
    """
    directory = Path(directory)
    try:
        (directory / "truth").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create {directory}: {exc}") from exc

    n = len(ph.dataset)
    numbers = list(range(n))
    if shuffle_names:
        numbers = [int(k) for k in np.random.default_rng([ph.spec.rng_seed, 3]).permutation(n)]
    entries = []
    for s, t, num in zip(ph.dataset, ph.truth, numbers):
        name = f"slice_{num:03d}.{fmt}"
        write_image(s.pixels, directory / name)
        write_image(np.where(t, 255, 0).astype(np.uint8), directory / "truth" / name)
        entries.append((s.acq_index, name, f"truth/{name}"))
    path = write_manifest(directory / "manifest.txt", entries)
    atomic_write_bytes(directory / "phantom.json", (json.dumps(ph.manifest, indent=2) + "\n").encode())
    return path
