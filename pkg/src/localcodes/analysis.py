"""Selectivity analysis of hidden units.

A unit separates a class when every activation for that class lies strictly
above (selectively on) or strictly below (selectively off) every activation
for the rest of the data.  The signed selectivity is the width of the empty
interval between the two groups, positive for on-units and negative for
off-units; without separation it is the larger (least negative) of the two
non-positive gap values.  A unit counts as a local code when some class is
separated with |gap| at or above the threshold.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FitError, UsageError
from .network import ActivationRecord

DEFAULT_THRESHOLD = 0.05


def selectivity(acts_a, acts_not_a) -> float:
    """Signed separation gap between one class's activations and the rest."""
    a = np.asarray(acts_a, dtype=np.float64)
    na = np.asarray(acts_not_a, dtype=np.float64)
    if a.size == 0 or na.size == 0:
        raise UsageError("selectivity: both groups must be non-empty")
    on_gap = float(a.min() - na.max())
    off_gap = float(na.min() - a.max())
    if on_gap > 0.0:
        return on_gap
    if off_gap > 0.0:
        return -off_gap
    return max(on_gap, off_gap)


@dataclass
class UnitSelectivity:
    unit: int
    best_class: int
    polarity: str                 # "on" | "off" | "none"
    signed_selectivity: float
    is_local_code: bool
    qualifying_classes: list[int]
    on_gaps: np.ndarray           # per class
    off_gaps: np.ndarray          # per class

    def to_dict(self) -> dict:
        return {
            "unit": self.unit,
            "best_class": self.best_class,
            "polarity": self.polarity,
            "signed_selectivity": self.signed_selectivity,
            "is_local_code": self.is_local_code,
            "qualifying_classes": self.qualifying_classes,
            "on_gaps": [float(v) for v in self.on_gaps],
            "off_gaps": [float(v) for v in self.off_gaps],
        }


@dataclass
class SelectivityReport:
    threshold: float
    classes: list[int]
    units: list[UnitSelectivity]
    local_code_count: int = field(init=False)

    def __post_init__(self):
        self.local_code_count = sum(u.is_local_code for u in self.units)

    @property
    def local_code_units(self) -> list[int]:
        return [u.unit for u in self.units if u.is_local_code]

    def to_json(self) -> str:
        return json.dumps({
            "threshold": self.threshold,
            "classes": self.classes,
            "local_code_count": self.local_code_count,
            "local_code_units": self.local_code_units,
            "units": [u.to_dict() for u in self.units],
        }, indent=2)


def count_local_codes(record: ActivationRecord,
                      threshold: float = DEFAULT_THRESHOLD) -> SelectivityReport:
    """Per-unit, per-class separation gaps and the resulting local-code count."""
    if threshold <= 0:
        raise UsageError("threshold must be positive")
    acts = record.activations
    classes = sorted(int(c) for c in np.unique(record.class_ids))
    if len(classes) == 0:
        raise UsageError("activation record has no rows")
    n_units = record.num_units
    n_classes = len(classes)

    on_gaps = np.empty((n_classes, n_units))
    off_gaps = np.empty((n_classes, n_units))
    for ci, c in enumerate(classes):
        in_c = record.class_ids == c
        if not np.any(in_c) or np.all(in_c):
            raise UsageError(f"class {c} has no complement rows")
        a = acts[in_c]
        na = acts[~in_c]
        on_gaps[ci] = a.min(axis=0) - na.max(axis=0)
        off_gaps[ci] = na.min(axis=0) - a.max(axis=0)

    units = []
    for u in range(n_units):
        on_u = on_gaps[:, u]
        off_u = off_gaps[:, u]
        signed = np.where(on_u > 0, on_u, np.where(off_u > 0, -off_u,
                                                   np.maximum(on_u, off_u)))
        separated = (on_u > 0) | (off_u > 0)
        qualifying = [classes[i] for i in range(n_classes)
                      if separated[i] and abs(signed[i]) >= threshold]
        if np.any(separated):
            best_i = int(np.argmax(np.where(separated, np.abs(signed), -np.inf)))
        else:
            best_i = int(np.argmax(signed))
        best_signed = float(signed[best_i])
        if on_u[best_i] > 0:
            polarity = "on"
        elif off_u[best_i] > 0:
            polarity = "off"
        else:
            polarity = "none"
        units.append(UnitSelectivity(
            unit=u, best_class=classes[best_i], polarity=polarity,
            signed_selectivity=best_signed, is_local_code=bool(qualifying),
            qualifying_classes=qualifying,
            on_gaps=on_u.copy(), off_gaps=off_u.copy(),
        ))
    return SelectivityReport(threshold=threshold, classes=classes, units=units)


def chance_disjoint_probability(class_size: int, total: int) -> float:
    """log10 probability that a class's activations land disjoint by chance.

    This is log10(1 / C(total, class_size)), evaluated with log-gamma so it
    stays finite for large arguments.
    """
    if class_size <= 0 or total <= 0 or class_size > total:
        raise UsageError(f"invalid sizes class_size={class_size}, total={total}")
    log_comb = (math.lgamma(total + 1) - math.lgamma(class_size + 1)
                - math.lgamma(total - class_size + 1))
    return -log_comb / math.log(10.0)


@dataclass(frozen=True)
class SqrtFit:
    a: float
    b: float
    r_squared: float

    def predict(self, p) -> np.ndarray:
        return self.a + self.b * np.sqrt(np.asarray(p, dtype=np.float64))


def sqrt_fit(points, cutoff: float | None = None) -> SqrtFit:
    """Least squares of count = a + b*sqrt(p) over (p, count) pairs.

    With a cutoff, only points with p <= cutoff participate (the tail past
    the zero crossing carries no information about the falling curve).
    """
    pts = [(float(p), float(c)) for p, c in points]
    if cutoff is not None:
        pts = [(p, c) for p, c in pts if p <= cutoff]
    if len(pts) < 3:
        raise FitError(f"need at least 3 points, have {len(pts)}")
    p = np.array([q[0] for q in pts])
    y = np.array([q[1] for q in pts])
    if np.any(p < 0) or np.any(p > 1):
        raise FitError("rate values must lie in [0, 1]")
    if len(np.unique(p)) < 3:
        raise FitError("need at least 3 distinct rate values")
    design = np.column_stack([np.ones_like(p), np.sqrt(p)])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 2:
        raise FitError("degenerate design matrix")
    resid = y - design @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res < 1e-12 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return SqrtFit(a=float(coef[0]), b=float(coef[1]), r_squared=r2)


@dataclass(frozen=True)
class LcStatistics:
    count: int
    minimum: float
    maximum: float
    mean: float
    std_dev: float
    std_error: float

    def to_dict(self) -> dict:
        return {"count": self.count, "min": self.minimum, "max": self.maximum,
                "mean": self.mean, "std_dev": self.std_dev,
                "std_error": self.std_error}


def lc_statistics(counts) -> LcStatistics:
    """Sample statistics of a list of local-code counts (std with ddof=1)."""
    arr = np.asarray(list(counts), dtype=np.float64)
    if arr.size == 0:
        raise UsageError("lc_statistics: empty input")
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return LcStatistics(
        count=int(arr.size),
        minimum=float(arr.min()),
        maximum=float(arr.max()),
        mean=float(arr.mean()),
        std_dev=std,
        std_error=std / math.sqrt(arr.size),
    )


@dataclass(frozen=True)
class HistogramSeries:
    bin_edges: np.ndarray   # length k+1
    pdf: np.ndarray         # length k, sums to 1
    cdf: np.ndarray         # length k, ends at 1

    def to_dict(self) -> dict:
        return {"bin_edges": self.bin_edges.tolist(), "pdf": self.pdf.tolist(),
                "cdf": self.cdf.tolist()}


def histogram(counts, bin_width: int = 1) -> HistogramSeries:
    """Normalized PDF (mass per bin) and CDF over fixed-width bins."""
    if bin_width < 1:
        raise UsageError("bin_width must be >= 1")
    arr = np.asarray(list(counts), dtype=np.float64)
    if arr.size == 0:
        raise UsageError("histogram: empty input")
    first = math.floor(arr.min() / bin_width) * bin_width
    n_bins = int((arr.max() - first) // bin_width) + 1
    edges = first + bin_width * np.arange(n_bins + 1)
    hist, _ = np.histogram(arr, bins=edges)
    pdf = hist / arr.size
    return HistogramSeries(bin_edges=edges.astype(np.float64), pdf=pdf,
                           cdf=np.cumsum(pdf))
