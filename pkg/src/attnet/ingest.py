"""Loading and validation of attention events, trends windows, region maps
and word embeddings.

All loaders are pure functions of the file bytes.  CSV headers are fixed:

* events:     ``date,source,target,count,co_mentions``
* trends:     ``source,window_start,window_end,target,day,value``
* regions:    ``country,region``
* embeddings: whitespace separated ``word v1 ... vd`` rows
"""
from __future__ import annotations

import csv
import datetime as dt
import io
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import DimensionMismatch, LengthMismatch, MalformedRow, UnknownRegionLabel

logger = logging.getLogger(__name__)

EVENT_HEADER = ("date", "source", "target", "count", "co_mentions")
TRENDS_HEADER = ("source", "window_start", "window_end", "target", "day", "value")
REGION_HEADER = ("country", "region")
REGIONS = ("Africa", "Americas", "Asia", "Europe", "Oceania")

DEFAULT_PERIOD = (dt.date(2016, 3, 7), dt.date(2017, 4, 14))

_CODE_RE = re.compile(r"^[A-Z]{2}$")


def is_country_code(code: str) -> bool:
    return bool(_CODE_RE.match(code))


def parse_day(text: str) -> dt.date:
    return dt.date.fromisoformat(text.strip())


def day_range(start: dt.date, end: dt.date) -> list[dt.date]:
    """Inclusive list of calendar days."""
    return [start + dt.timedelta(days=i) for i in range((end - start).days + 1)]


@dataclass(frozen=True)
class AttentionEvent:
    date: dt.date
    source: str
    target: str
    count: int
    co_mentions: tuple[str, ...] = ()


@dataclass(frozen=True)
class TrendsWindow:
    source: str
    start_date: dt.date
    end_date: dt.date
    values: Mapping[str, tuple[int, ...]] = field(default_factory=dict)

    @property
    def length(self) -> int:
        return (self.end_date - self.start_date).days + 1

    def value(self, target: str, day: dt.date) -> int:
        return self.values[target][(day - self.start_date).days]


@dataclass(frozen=True)
class EmbeddingTable:
    dimension: int
    words: tuple[str, ...]
    vectors: np.ndarray
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self._index:
            self._index.update({w: i for i, w in enumerate(self.words)})

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def get(self, word: str):
        i = self._index.get(word)
        return None if i is None else self.vectors[i]

    def __len__(self) -> int:
        return len(self.words)

    def __eq__(self, other):
        if not isinstance(other, EmbeddingTable):
            return NotImplemented
        return (self.dimension == other.dimension and self.words == other.words
                and np.array_equal(self.vectors, other.vectors))

    __hash__ = None


RegionMap = dict  # CountryCode -> region label


def _open_text(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _check_header(reader, expected, path) -> None:
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRow(1, f"{path}: missing header, expected {','.join(expected)}")
    if tuple(h.strip() for h in header) != expected:
        raise MalformedRow(1, f"header {header!r} != {','.join(expected)}")


def _code(text: str, line: int, what: str) -> str:
    code = text.strip()
    if not is_country_code(code):
        raise MalformedRow(line, f"bad {what} country code {text!r}")
    return code


def _day(text: str, line: int) -> dt.date:
    try:
        return parse_day(text)
    except ValueError:
        raise MalformedRow(line, f"bad date {text!r}") from None


def _int(text: str, line: int, what: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise MalformedRow(line, f"bad {what} {text!r}") from None


def parse_co_mentions(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(";") if p.strip())


def load_attention_events(path, period=DEFAULT_PERIOD) -> list[AttentionEvent]:
    """Read attention events, rejecting rows outside ``period``.

    Self-loops are kept; network construction drops them.
    """
    return parse_attention_events(_open_text(path), period, name=str(path))


def parse_attention_events(text: str, period=DEFAULT_PERIOD, name: str = "<events>") -> list[AttentionEvent]:
    reader = csv.reader(io.StringIO(text))
    _check_header(reader, EVENT_HEADER, name)
    start, end = period
    events = []
    out_of_period = 0
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(EVENT_HEADER):
            raise MalformedRow(line, f"expected {len(EVENT_HEADER)} fields, got {len(row)}")
        day = _day(row[0], line)
        source = _code(row[1], line, "source")
        target = _code(row[2], line, "target")
        count = _int(row[3], line, "count")
        if count < 0:
            raise MalformedRow(line, f"negative count {count}")
        if not start <= day <= end:
            out_of_period += 1
            continue
        events.append(AttentionEvent(day, source, target, count, parse_co_mentions(row[4])))
    if out_of_period:
        logger.warning("%s: %d rows outside %s..%s rejected", name, out_of_period, start, end)
    return events


def write_attention_events(events: Iterable[AttentionEvent], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_HEADER)
        for e in events:
            w.writerow([e.date.isoformat(), e.source, e.target, e.count, ";".join(e.co_mentions)])


def load_trends_windows(path) -> list[TrendsWindow]:
    """Read windowed search-volume rows into one TrendsWindow per
    (source, window_start).

    Days without a row are read as 0.
    """
    return parse_trends_windows(_open_text(path), name=str(path))


def parse_trends_windows(text: str, name: str = "<trends>") -> list[TrendsWindow]:
    reader = csv.reader(io.StringIO(text))
    _check_header(reader, TRENDS_HEADER, name)
    windows: dict[tuple[str, dt.date], dict] = {}
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(TRENDS_HEADER):
            raise MalformedRow(line, f"expected {len(TRENDS_HEADER)} fields, got {len(row)}")
        source = _code(row[0], line, "source")
        w_start = _day(row[1], line)
        w_end = _day(row[2], line)
        target = _code(row[3], line, "target")
        day = _day(row[4], line)
        value = _int(row[5], line, "value")
        if not 0 <= value <= 100:
            raise MalformedRow(line, f"value {value} outside [0, 100]")
        if w_end < w_start:
            raise MalformedRow(line, f"window end {w_end} before start {w_start}")
        key = (source, w_start)
        win = windows.setdefault(key, {"end": w_end, "series": {}})
        if win["end"] != w_end:
            raise MalformedRow(line, f"window {source}@{w_start} declared with two end dates")
        if not w_start <= day <= w_end:
            raise LengthMismatch(f"line {line}: day {day} outside window {w_start}..{w_end}")
        series = win["series"].setdefault(target, {})
        if day in series:
            raise MalformedRow(line, f"duplicate day {day} for {source}->{target}")
        series[day] = value
    out = []
    for (source, w_start), win in sorted(windows.items()):
        n = (win["end"] - w_start).days + 1
        values = {}
        for target in sorted(win["series"]):
            vec = [0] * n
            for day, v in win["series"][target].items():
                vec[(day - w_start).days] = v
            values[target] = tuple(vec)
        out.append(TrendsWindow(source, w_start, win["end"], values))
    return out


def write_trends_windows(windows: Iterable[TrendsWindow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRENDS_HEADER)
        for win in windows:
            days = day_range(win.start_date, win.end_date)
            for target in sorted(win.values):
                vec = win.values[target]
                if len(vec) != len(days):
                    raise LengthMismatch(f"{win.source}->{target}: {len(vec)} values for {len(days)} days")
                for day, v in zip(days, vec):
                    w.writerow([win.source, win.start_date.isoformat(), win.end_date.isoformat(),
                                target, day.isoformat(), v])


def load_region_map(path) -> dict[str, str]:
    text = _open_text(path)
    reader = csv.reader(io.StringIO(text))
    _check_header(reader, REGION_HEADER, str(path))
    mapping: dict[str, str] = {}
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 2:
            raise MalformedRow(line, f"expected 2 fields, got {len(row)}")
        code = _code(row[0], line, "region-map")
        region = row[1].strip()
        if region not in REGIONS:
            raise UnknownRegionLabel(f"line {line}: {region!r} is not one of {', '.join(REGIONS)}")
        if code in mapping and mapping[code] != region:
            raise MalformedRow(line, f"{code} mapped to two regions")
        mapping[code] = region
    return mapping


def write_region_map(mapping: Mapping[str, str], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REGION_HEADER)
        for code in sorted(mapping):
            w.writerow([code, mapping[code]])


def load_embeddings(path) -> EmbeddingTable:
    words = []
    rows = []
    dim = None
    seen = set()
    for line, raw in enumerate(_open_text(path).splitlines(), start=1):
        parts = raw.split()
        if not parts:
            continue
        word = parts[0].lower()
        try:
            vec = [float(v) for v in parts[1:]]
        except ValueError:
            raise MalformedRow(line, "non-numeric embedding component") from None
        if not vec:
            raise DimensionMismatch(f"line {line}: word {word!r} has no vector")
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise DimensionMismatch(f"line {line}: expected {dim} components, got {len(vec)}")
        if word in seen:
            raise MalformedRow(line, f"duplicate word {word!r}")
        seen.add(word)
        words.append(word)
        rows.append(vec)
    if dim is None:
        raise DimensionMismatch("embedding file has no rows")
    return EmbeddingTable(dim, tuple(words), np.asarray(rows, dtype=float))
