"""Seeded synthetic worlds with planted couplings and communities.

Random draws follow :mod:`attnet.rng`: pair ``(i, j)`` of the country list
uses stream ``(seed, i, j, layer)`` with layer 0 for media and 1 for public,
so series do not depend on generation order or parallelism.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from .causality import Direction
from .errors import InvalidSpec
from .ingest import (
    DEFAULT_PERIOD,
    REGIONS,
    AttentionEvent,
    TrendsWindow,
    day_range,
    write_attention_events,
    write_region_map,
    write_trends_windows,
)
from .netbuild import MEDIA, AttentionNetwork
from .rng import gaussian, stream

BURN_IN = 100
DEFAULT_SPLIT = dt.date(2016, 10, 7)


@dataclass(frozen=True)
class Coupling:
    source: str
    target: str
    direction: Direction
    lag: int
    coefficient: float


@dataclass(frozen=True)
class WorldSpec:
    countries: tuple[tuple[str, str], ...]  # (code, region)
    period_days: int = 404
    planted_communities: dict = field(default_factory=dict)
    planted_couplings: tuple[Coupling, ...] = ()
    noise_sigma: float = 1.0
    seed: int = 0
    ar_coef: float = 0.3

    @property
    def codes(self) -> list[str]:
        return [c for c, _ in self.countries]

    def validate(self) -> None:
        codes = self.codes
        if len(set(codes)) != len(codes):
            raise InvalidSpec("duplicate country codes")
        for _, region in self.countries:
            if region not in REGIONS:
                raise InvalidSpec(f"unknown region {region!r}")
        if self.period_days < 2:
            raise InvalidSpec("period_days must be >= 2")
        if not self.noise_sigma > 0:
            raise InvalidSpec("noise_sigma must be positive")
        if not -1 < self.ar_coef < 1:
            raise InvalidSpec("ar_coef must lie in (-1, 1)")
        for c in self.planted_couplings:
            if not 1 <= c.lag <= 14:
                raise InvalidSpec(f"coupling lag {c.lag} outside [1, 14]")
            if not -1 < c.coefficient < 1:
                raise InvalidSpec(f"coupling coefficient {c.coefficient} outside (-1, 1)")
            if c.source not in codes or c.target not in codes or c.source == c.target:
                raise InvalidSpec(f"coupling {c.source}->{c.target} references unknown or identical countries")
        if self.planted_communities and set(self.planted_communities) != set(codes):
            raise InvalidSpec("planted partition must cover every country")


def _pair_index(spec: WorldSpec) -> dict[tuple[str, str], tuple[int, int]]:
    codes = spec.codes
    return {(a, b): (i, j) for i, a in enumerate(codes) for j, b in enumerate(codes) if a != b}


def gen_coupled_series(spec: WorldSpec) -> tuple[dict, dict]:
    """AR(1) media and public series per ordered pair, with couplings.

    A coupling on pair (s, t) adds ``coefficient * driver[t - lag]`` into the
    AR recursion of the driven layer of the same pair.
    """
    spec.validate()
    pairs = _pair_index(spec)
    n_total = spec.period_days + BURN_IN
    noise = {}
    for key, (i, j) in pairs.items():
        for layer in (0, 1):
            noise[key, layer] = spec.noise_sigma * gaussian(stream(spec.seed, i, j, layer), n_total)

    driven: dict[tuple, list[Coupling]] = {}
    for c in spec.planted_couplings:
        driven_layer = 1 if c.direction == Direction.MEDIA_TO_PUBLIC else 0
        driven.setdefault(((c.source, c.target), driven_layer), []).append(c)
    for key, layer in driven:
        if ((key, 1 - layer)) in driven:
            raise InvalidSpec(f"pair {key} is coupled in both directions")

    series: dict = {}
    phi = spec.ar_coef

    def build(key, layer):
        if (key, layer) in series:
            return series[key, layer]
        couplings = driven.get((key, layer), [])
        drivers = [(build(key, 1 - layer), c) for c in couplings]
        e = noise[key, layer]
        v = np.zeros(n_total)
        for t in range(1, n_total):
            acc = phi * v[t - 1] + e[t]
            for x, c in drivers:
                if t >= c.lag:
                    acc += c.coefficient * x[t - c.lag]
            v[t] = acc
        series[key, layer] = v
        return v

    media = {}
    public = {}
    for key in sorted(pairs):
        media[key] = build(key, 0)[BURN_IN:].copy()
        public[key] = build(key, 1)[BURN_IN:].copy()
    return media, public


WeightLaw = Union[str, Callable[[np.random.Generator], float]]


def _draw_weight(law: WeightLaw, gen: np.random.Generator) -> float:
    if callable(law):
        return float(law(gen))
    if law == "unit":
        return 1.0
    if law == "exponential":
        return float(-np.log1p(-gen.random())) + 1e-9
    if law == "lognormal":
        return float(np.exp(gaussian(gen, 1)[0]))
    raise InvalidSpec(f"unknown weight law {law!r}")


def gen_planted_network(spec: WorldSpec, p_in: float, p_out: float,
                        weight_law: WeightLaw = "unit", layer: str = MEDIA) -> AttentionNetwork:
    """Directed block model over the planted partition."""
    spec.validate()
    if not 0 <= p_out <= p_in <= 1:
        raise InvalidSpec(f"need 0 <= p_out <= p_in <= 1, got p_in={p_in}, p_out={p_out}")
    if not spec.planted_communities:
        raise InvalidSpec("planted_communities is empty")
    codes = spec.codes
    gen = stream(spec.seed, 2)
    edges = {}
    for a in codes:
        for b in codes:
            if a == b:
                continue
            same = spec.planted_communities[a] == spec.planted_communities[b]
            if gen.random() < (p_in if same else p_out):
                edges[(a, b)] = _draw_weight(weight_law, gen)
    return AttentionNetwork.from_edges(layer, edges, scope=f"sim-{spec.seed}", nodes=codes)


def _period(spec: WorldSpec, start: dt.date) -> list[dt.date]:
    return day_range(start, start + dt.timedelta(days=spec.period_days - 1))


def _level(level, pair, default: float) -> float:
    if isinstance(level, dict):
        return float(level.get(pair, default))
    return float(level)


def media_events(spec: WorldSpec, media: dict, start: dt.date = DEFAULT_PERIOD[0],
                 level: Union[float, dict] = 5.0, scale: float = 2.0,
                 topics: Optional[dict] = None) -> list[AttentionEvent]:
    """Quantize media series into non-negative daily article counts.

    ``level`` is a baseline count, either global or per ordered pair (pairs
    missing from the mapping use 5).
    """
    days = _period(spec, start)
    events = []
    for (s, t), v in sorted(media.items()):
        counts = np.maximum(0, np.rint(_level(level, (s, t), 5.0) + scale * v)).astype(int)
        words = tuple(topics.get((s, t), ())) if topics else ()
        for day, c in zip(days, counts):
            if c > 0:
                events.append(AttentionEvent(day, s, t, int(c), words))
    events.sort(key=lambda e: (e.date, e.source, e.target))
    return events


def trends_windows(spec: WorldSpec, public: dict, reference: str = "US", start: dt.date = DEFAULT_PERIOD[0],
                   split: Optional[dt.date] = None, level: Union[float, dict] = 20.0,
                   scale: float = 4.0) -> list[TrendsWindow]:
    """Cut public series into two overlapping windows, each normalized to a
    0-100 integer scale per source as a trends service would."""
    days = _period(spec, start)
    if split is None:
        default_layout = start == DEFAULT_PERIOD[0] and len(days) == 404
        split = DEFAULT_SPLIT if default_layout else days[len(days) // 2]
    k = (split - start).days
    if not 0 < k < len(days) - 1:
        raise InvalidSpec(f"split day {split} must lie strictly inside the period")
    codes = spec.codes
    if reference not in codes:
        raise InvalidSpec(f"reference country {reference} not in the world")
    out = []
    for i, s in enumerate(codes):
        volumes = {}
        for t in codes:
            if t == s:
                # self-searches only matter as the stitching reference
                if t != reference:
                    continue
                gen = stream(spec.seed, i, i, 3)
                v = gaussian(gen, len(days))
            else:
                v = public[(s, t)]
            volumes[t] = np.maximum(0.0, _level(level, (s, t), 20.0) + scale * np.asarray(v))
        for lo, hi in ((0, k), (k, len(days) - 1)):
            top = max(float(vol[lo:hi + 1].max()) for vol in volumes.values()) or 1.0
            values = {t: tuple(int(x) for x in np.rint(100.0 * vol[lo:hi + 1] / top)) for t, vol in volumes.items()}
            out.append(TrendsWindow(s, days[lo], days[hi], values))
    return out


def write_world(spec: WorldSpec, outdir, reference: str = "US", topics: Optional[dict] = None,
                media_level: Union[float, dict] = 5.0, public_level: Union[float, dict] = 20.0) -> dict[str, Path]:
    """Write events, trends and region CSVs in the ingest formats."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    media, public = gen_coupled_series(spec)
    paths = {
        "events": outdir / "events.csv",
        "trends": outdir / "trends.csv",
        "regions": outdir / "regions.csv",
    }
    write_attention_events(media_events(spec, media, level=media_level, topics=topics), paths["events"])
    write_trends_windows(trends_windows(spec, public, reference, level=public_level), paths["trends"])
    write_region_map(dict(spec.countries), paths["regions"])
    return paths
