"""Toss-experiment calibration: a straight line through heads/tails counts versus
height, solved for the height whose expected count matches a fair die."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (DomainError, EmptyDatasetError, NoSolutionError, ParseError,
                     SingularFitError, ValidationError)

CSV_HEADER = ("height_mm", "heads_tails", "total")


class ExtrapolationWarning(UserWarning):
    """The fair height lies outside the range of measured heights."""


@dataclass(frozen=True)
class TossRecord:
    height_mm: float
    heads_tails: int
    total: int

    def __post_init__(self):
        if not (math.isfinite(self.height_mm) and self.height_mm > 0):
            raise ValidationError(f"height must be positive, got {self.height_mm}")
        if self.total <= 0:
            raise ValidationError(f"total tosses must be positive, got {self.total}")
        if not 0 <= self.heads_tails <= self.total:
            raise ValidationError(
                f"heads/tails count {self.heads_tails} outside [0, {self.total}]")


@dataclass(frozen=True)
class TossDataset:
    records: tuple

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def heights(self) -> np.ndarray:
        return np.array([r.height_mm for r in self.records], dtype=float)

    @property
    def counts(self) -> np.ndarray:
        return np.array([r.heads_tails for r in self.records], dtype=float)

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.records:
            h = float(r.height_mm)
            w.writerow([str(int(h)) if h.is_integer() else repr(h), r.heads_tails, r.total])
        return out.getvalue()


@dataclass(frozen=True)
class LinearFit:
    a: float
    b: float
    residual_sum_squares: float
    n_points: int
    covariance: tuple
    height_range: tuple

    @property
    def slope_stderr(self) -> float:
        return math.sqrt(self.covariance[0][0])

    @property
    def intercept_stderr(self) -> float:
        return math.sqrt(self.covariance[1][1])

    def predict(self, height):
        return self.a * np.asarray(height) + self.b


def _number(text, line, name, kind):
    try:
        value = kind(text)
    except ValueError:
        raise ParseError(f"{name} is not a valid {kind.__name__}: {text!r}", line) from None
    if kind is float and not math.isfinite(value):
        raise ParseError(f"{name} is not finite: {text!r}", line)
    return value


def parse_toss_csv(text: str) -> TossDataset:
    """Parse ``height_mm,heads_tails,total`` CSV text.

    A header line is required. Duplicate heights are kept as separate records.
    """
    rows = list(csv.reader(io.StringIO(text.lstrip("\ufeff"))))
    if not rows or tuple(c.strip() for c in rows[0]) != CSV_HEADER:
        raise ParseError(f"expected header {','.join(CSV_HEADER)}", 1)
    records = []
    for line, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", line)
        h = _number(row[0].strip(), line, "height_mm", float)
        k = _number(row[1].strip(), line, "heads_tails", int)
        n = _number(row[2].strip(), line, "total", int)
        try:
            records.append(TossRecord(h, k, n))
        except ValidationError as exc:
            raise ValidationError(f"line {line}: {exc}") from None
    if not records:
        raise EmptyDatasetError("dataset has no records")
    return TossDataset(tuple(records))


def fit_linear(dataset: TossDataset) -> LinearFit:
    """Ordinary least squares of heads/tails count on height."""
    x, y = dataset.heights, dataset.counts
    m = len(x)
    if m < 2 or np.ptp(x) == 0:
        raise SingularFitError("need at least two distinct heights")
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    a = float(((x - xm) * (y - ym)).sum() / sxx)
    b = float(ym - a * xm)
    resid = y - (a * x + b)
    rss = float(resid @ resid)
    sigma2 = rss / (m - 2) if m > 2 else 0.0
    var_a = sigma2 / sxx
    var_b = sigma2 * (1.0 / m + xm * xm / sxx)
    cov_ab = -xm * sigma2 / sxx
    return LinearFit(a, b, rss, m, ((var_a, cov_ab), (cov_ab, var_b)),
                     (float(x.min()), float(x.max())))


def expected_count(n: int, total: float) -> float:
    """Expected heads/tails landings in ``total`` tosses of a fair ``n``-face coin/prism die."""
    if n < 3:
        raise DomainError(f"a fair die needs at least 3 faces, got {n}")
    if not total > 0:
        raise DomainError(f"total tosses must be positive, got {total}")
    return total * 2.0 / n


def fair_height(fit: LinearFit, n: int, total: float) -> float:
    """Height at which the fitted line predicts the fair heads/tails count.

    Emits :class:`ExtrapolationWarning` when the answer lies outside the
    measured heights.
    """
    if fit.a == 0:
        raise NoSolutionError("fitted slope is zero; no height gives the fair count")
    h = (expected_count(n, total) - fit.b) / fit.a
    lo, hi = fit.height_range
    if not lo <= h <= hi:
        warnings.warn(f"fair height {h:.4f} mm lies outside measured range [{lo}, {hi}] mm",
                      ExtrapolationWarning, stacklevel=2)
    return h


def fair_height_stderr(fit: LinearFit, n: int, total: float) -> float:
    """Delta-method standard error of :func:`fair_height`."""
    y = expected_count(n, total)
    a, b = fit.a, fit.b
    # h = (y - b) / a
    grad = np.array([-(y - b) / a ** 2, -1.0 / a])
    cov = np.array(fit.covariance)
    return float(math.sqrt(grad @ cov @ grad))


def scale_height(height_mm: float, radius_ratio: float) -> float:
    """Rescale a fair height to a solid of ``radius_ratio`` times the radius (same aspect ratio)."""
    if not radius_ratio > 0:
        raise DomainError(f"radius ratio must be positive, got {radius_ratio}")
    return height_mm * radius_ratio


@dataclass(frozen=True)
class FairnessReport:
    observed: int
    total: int
    faces: int
    expected: float
    z: float
    p_value: float
    inconsistent: bool


def fairness_test(observed: int, total: int, n: int, alpha: float = 0.05) -> FairnessReport:
    """Normal-approximation binomial test of heads/tails count against ``p = 2/n``."""
    if total <= 0:
        raise DomainError(f"total tosses must be positive, got {total}")
    if not 0 <= observed <= total:
        raise DomainError(f"observed count {observed} outside [0, {total}]")
    if n < 3:
        raise DomainError(f"a fair die needs at least 3 faces, got {n}")
    p = 2.0 / n
    mean = total * p
    z = (observed - mean) / math.sqrt(total * p * (1.0 - p))
    pv = math.erfc(abs(z) / math.sqrt(2.0))
    return FairnessReport(observed, total, n, mean, z, pv, pv < alpha)


def calibrate(dataset: TossDataset, n: int, total: float,
              scale_ratio: float | None = None) -> dict:
    """Full calibration report as a JSON-ready dict."""
    fit = fit_linear(dataset)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ExtrapolationWarning)
        h = fair_height(fit, n, total)
    report = {
        "a": fit.a,
        "b": fit.b,
        "rss": fit.residual_sum_squares,
        "fair_height_mm": h,
        "fair_height_stderr_mm": fair_height_stderr(fit, n, total) if fit.n_points > 2 else None,
        "expected_count": expected_count(n, total),
        "scale_ratio": scale_ratio,
        "scaled_fair_height_mm": None if scale_ratio is None else scale_height(h, scale_ratio),
        "warnings": [str(w.message) for w in caught if issubclass(w.category, ExtrapolationWarning)],
    }
    return report


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2)
