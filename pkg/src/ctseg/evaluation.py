"""Slice-level evaluation: TP/FN/AbsFP/TN tallies and the derived rates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

UNDEFINED = "--"

COLUMNS = (
    "dataset", "TP", "FN", "AbsFP", "TN", "N", "CS",
    "sensitivity", "specificity", "PPV", "NPV", "%error", "%accuracy",
)


@dataclass(frozen=True)
class EvalCounts:
    tp: int = 0
    fn: int = 0
    abs_fp: int = 0
    tn: int = 0

    @property
    def n(self) -> int:
        return self.tp + self.fn + self.abs_fp + self.tn

    @property
    def cs(self) -> int:
        return self.tp + self.tn

    def __add__(self, other: "EvalCounts") -> "EvalCounts":
        return EvalCounts(
            self.tp + other.tp, self.fn + other.fn, self.abs_fp + other.abs_fp, self.tn + other.tn
        )


@dataclass(frozen=True)
class EvalReport:
    """Rates are ``None`` when undefined; percentages are unrounded."""

    counts: EvalCounts
    sensitivity: float | None
    specificity: float | None
    ppv: float | None
    npv: float | None
    pct_error: float
    pct_accuracy: float

    def row(self, label="") -> list[str]:
        c = self.counts
        return [
            str(label), str(c.tp), str(c.fn), str(c.abs_fp), str(c.tn), str(c.n), str(c.cs),
            fmt_rate(self.sensitivity), fmt_rate(self.specificity),
            fmt_rate(self.ppv), fmt_rate(self.npv),
            fmt_rate(self.pct_error), fmt_rate(self.pct_accuracy),
        ]


def fmt_rate(value: float | None) -> str:
    """Three decimals with trailing zeros trimmed; ``--`` for undefined."""
    if value is None:
        return UNDEFINED
    text = f"{value:.3f}".rstrip("0").rstrip(".")
    return text if text not in ("", "-0") else "0"


def classify_slice(truth: np.ndarray, output: np.ndarray, min_area: int = 0) -> str:
    has_bm = bool(np.any(truth))
    segmented = int(np.count_nonzero(output)) > min_area
    if has_bm:
        return "tp" if segmented else "fn"
    return "abs_fp" if segmented else "tn"


def classify_slices(outputs: Sequence, truth: Sequence, min_area: int = 0) -> EvalCounts:
    """Tally slices; ``outputs`` may hold SegmentedSlice objects or plain rasters."""
    if min_area < 0:
        raise ValueError("min_area must be >= 0")
    if len(outputs) != len(truth):
        raise ValueError(f"{len(outputs)} outputs but {len(truth)} truth rasters")
    tally = {"tp": 0, "fn": 0, "abs_fp": 0, "tn": 0}
    for out, t in zip(outputs, truth):
        px = out.pixels if hasattr(out, "pixels") else np.asarray(out)
        t = np.asarray(t)
        if px.shape != t.shape:
            raise ValueError(f"shape mismatch: output {px.shape}, truth {t.shape}")
        tally[classify_slice(t, px, min_area)] += 1
    return EvalCounts(**tally)


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def compute_report(counts: EvalCounts) -> EvalReport:
    """Derive the rates.

    Specificity and NPV are left undefined whenever TN is 0, which is how the
    published table reports datasets without negative slices.
    """
    n = counts.n
    if n == 0:
        raise ValueError("cannot evaluate an empty dataset")
    tp, fn, fp, tn = counts.tp, counts.fn, counts.abs_fp, counts.tn
    has_negatives = tn > 0
    return EvalReport(
        counts=counts,
        sensitivity=_ratio(tp, tp + fn),
        specificity=_ratio(tn, tn + fp) if has_negatives else None,
        ppv=_ratio(tp, tp + fp),
        npv=_ratio(tn, tn + fn) if has_negatives else None,
        pct_error=(fp + fn) / n * 100.0,
        pct_accuracy=counts.cs / n * 100.0,
    )


def format_table(rows: Sequence[Sequence[str]], header: Sequence[str] = COLUMNS) -> str:
    rows = [list(header)] + [list(r) for r in rows]
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    return "\n".join("  ".join(cell.rjust(w) for cell, w in zip(r, widths)) for r in rows) + "\n"


def format_csv(rows: Sequence[Sequence[str]], header: Sequence[str] = COLUMNS) -> str:
    return "\n".join(",".join(r) for r in [list(header)] + [list(r) for r in rows]) + "\n"
