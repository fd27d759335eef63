"""Concatenation of two normalized search-volume windows.

Each window is rescaled so that the reference target's volume on the shared
overlap day becomes ``scale_top`` after adding ``smoothing_add`` to every
value.  Days before the overlap come from the first window, the overlap day
and later from the second.
"""
from __future__ import annotations

import csv
import datetime as dt
import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import MissingReference, NoOverlap, TargetSetMismatch, TooShort
from .ingest import TrendsWindow, day_range

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StitchConfig:
    reference_target: str = "US"
    smoothing_add: int = 1
    scale_top: float = 100.0

    def __post_init__(self):
        if self.smoothing_add < 1:
            raise ValueError("smoothing_add must be >= 1")
        if not self.scale_top > 0:
            raise ValueError("scale_top must be positive")


@dataclass(frozen=True, eq=False)
class Series:
    """A daily series for one (source, target) pair.

    ``gap`` marks series where the target was missing from one window; the
    uncovered days hold NaN.  ``seam`` is the absolute discrepancy between the
    two windows' rescaled values on the overlap day.
    """

    source: str
    target: str
    start_date: dt.date
    values: np.ndarray
    gap: bool = False
    seam: float = 0.0

    def __len__(self) -> int:
        return len(self.values)

    @property
    def dates(self) -> list[dt.date]:
        return [self.start_date + dt.timedelta(days=i) for i in range(len(self.values))]

    def __eq__(self, other):
        if not isinstance(other, Series):
            return NotImplemented
        return (self.source, self.target, self.start_date, self.gap) == (
            other.source, other.target, other.start_date, other.gap
        ) and np.array_equal(self.values, other.values, equal_nan=True)

    __hash__ = None


@dataclass(frozen=True)
class StitchScales:
    first: float
    second: float


def window_scales(w1: TrendsWindow, w2: TrendsWindow, cfg: StitchConfig = StitchConfig()) -> StitchScales:
    _check_pair(w1, w2, cfg)
    ref = cfg.reference_target
    overlap = w2.start_date
    r1 = w1.value(ref, overlap) + cfg.smoothing_add
    r2 = w2.value(ref, overlap) + cfg.smoothing_add
    return StitchScales(cfg.scale_top / r1, cfg.scale_top / r2)


def _check_pair(w1: TrendsWindow, w2: TrendsWindow, cfg: StitchConfig) -> None:
    if w1.source != w2.source:
        raise NoOverlap(f"windows belong to different sources {w1.source} / {w2.source}")
    if w1.end_date != w2.start_date:
        raise NoOverlap(
            f"{w1.source}: window ending {w1.end_date} and window starting {w2.start_date} "
            "must share exactly one day"
        )
    ref = cfg.reference_target
    for w in (w1, w2):
        if ref not in w.values:
            raise MissingReference(f"{w.source} window {w.start_date}..{w.end_date} lacks {ref}")


def stitch_windows(w1: TrendsWindow, w2: TrendsWindow, cfg: StitchConfig = StitchConfig(),
                   strict: bool = False) -> list[Series]:
    """Stitch two consecutive windows of one source into continuous series.

    A target present in only one window yields a gap-flagged series, or
    raises :class:`TargetSetMismatch` when ``strict`` is set.
    """
    _check_pair(w1, w2, cfg)
    add = cfg.smoothing_add
    top = cfg.scale_top
    ref = cfg.reference_target
    # (v + add) * top / r rounds once, so the anchor lands on top exactly
    r1 = w1.value(ref, w2.start_date) + add
    r2 = w2.value(ref, w2.start_date) + add
    n1 = w1.length - 1  # days taken from the first window
    total = n1 + w2.length
    targets = sorted(set(w1.values) | set(w2.values))
    out = []
    for target in targets:
        in1, in2 = target in w1.values, target in w2.values
        if not (in1 and in2):
            msg = f"{w1.source}->{target} present only in the {'first' if in1 else 'second'} window"
            if strict:
                raise TargetSetMismatch(msg)
            logger.warning("%s; emitting gap-flagged series", msg)
        values = np.full(total, np.nan)
        seam = 0.0
        if in1:
            v1 = np.asarray(w1.values[target], dtype=float)
            values[:n1] = (v1[:n1] + add) * top / r1
        if in2:
            v2 = np.asarray(w2.values[target], dtype=float)
            values[n1:] = (v2 + add) * top / r2
        if in1 and in2:
            seam = abs((w1.values[target][n1] + add) * top / r1 - (w2.values[target][0] + add) * top / r2)
            if seam > 0:
                logger.debug("%s->%s seam discrepancy %.6g", w1.source, target, seam)
        out.append(Series(w1.source, target, w1.start_date, values, gap=not (in1 and in2), seam=seam))
    return out


def stitch_all(windows: Sequence[TrendsWindow], cfg: StitchConfig = StitchConfig()) -> list[Series]:
    """Stitch every source's pair of windows; sources are processed in code order."""
    by_source: dict[str, list[TrendsWindow]] = {}
    for w in windows:
        by_source.setdefault(w.source, []).append(w)
    out = []
    for source in sorted(by_source):
        ws = sorted(by_source[source], key=lambda w: w.start_date)
        if len(ws) != 2:
            raise NoOverlap(f"{source}: expected exactly two windows, got {len(ws)}")
        out.extend(stitch_windows(ws[0], ws[1], cfg))
    return out


def make_stationary(s: Series, order: int = 1) -> Series:
    if order not in (0, 1, 2):
        raise ValueError("differencing order must be 0, 1 or 2")
    if len(s.values) <= order:
        raise TooShort(f"series of length {len(s.values)} cannot be differenced {order} times")
    if order == 0:
        return s
    values = np.diff(s.values, n=order)
    return Series(s.source, s.target, s.start_date + dt.timedelta(days=order), values, s.gap, s.seam)


def write_series_csv(series: Iterable[Series], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "target", "date", "value"])
        for s in series:
            for day, v in zip(s.dates, s.values):
                w.writerow([s.source, s.target, day.isoformat(), "" if np.isnan(v) else repr(float(v))])


def read_series_csv(path) -> list[Series]:
    rows: dict[tuple[str, str], list] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            rows.setdefault((row["source"], row["target"]), []).append(
                (dt.date.fromisoformat(row["date"]), float(row["value"]) if row["value"] else np.nan)
            )
    out = []
    for (src, tgt), items in sorted(rows.items()):
        items.sort()
        values = np.array([v for _, v in items])
        out.append(Series(src, tgt, items[0][0], values, gap=bool(np.isnan(values).any())))
    return out


def series_period(s: Series) -> tuple[dt.date, dt.date]:
    return s.start_date, s.start_date + dt.timedelta(days=len(s.values) - 1)


__all__ = [
    "StitchConfig", "Series", "StitchScales", "window_scales", "stitch_windows", "stitch_all",
    "make_stationary", "write_series_csv", "read_series_csv", "series_period", "day_range",
]
