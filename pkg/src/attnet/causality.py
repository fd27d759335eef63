"""Pairwise Granger-causality tests between media and public attention."""
from __future__ import annotations

import csv
import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from . import stats
from .errors import (
    AllLagsInfeasible,
    AttnetError,
    DegenerateSeries,
    DirectionMismatch,
    InsufficientLength,
    SingularDesign,
)

logger = logging.getLogger(__name__)

DEFAULT_LAGS = tuple(range(1, 15))
MIN_RESIDUAL_DOF = 5


class Direction(str, enum.Enum):
    MEDIA_TO_PUBLIC = "MediaToPublic"
    PUBLIC_TO_MEDIA = "PublicToMedia"


class PairClass(str, enum.Enum):
    MEDIA_CAUSES_PUBLIC = "MediaCausesPublic"
    PUBLIC_CAUSES_MEDIA = "PublicCausesMedia"
    BOTH = "Both"
    NEITHER = "Neither"


@dataclass(frozen=True)
class GrangerFit:
    F: float
    p: float
    rss_restricted: float
    rss_unrestricted: float
    df_num: int
    df_den: int


@dataclass(frozen=True)
class GrangerResult:
    direction: Optional[Direction]
    best_lag: Optional[int]
    F: float
    p: float
    significant: bool
    scan_lag: int = 0  # lag that supplied F and p
    per_lag: tuple = field(default=(), repr=False, compare=False)


def _values(s) -> np.ndarray:
    return np.asarray(getattr(s, "values", s), dtype=float)


def _lagged(v: np.ndarray, lag: int) -> np.ndarray:
    t = len(v)
    return np.column_stack([v[lag - k: t - k] for k in range(1, lag + 1)])


def _ols_rss(design: np.ndarray, target: np.ndarray) -> float:
    q, r = np.linalg.qr(design)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag.min() <= 1e-10 * max(diag.max(), 1.0):
        raise SingularDesign("regressors are collinear")
    beta = np.linalg.solve(r, q.T @ target)
    resid = target - design @ beta
    return float(resid @ resid)


def granger_fit(x, y, lag: int) -> GrangerFit:
    """F test of whether ``lag`` past values of ``x`` improve an OLS
    autoregression of ``y`` on its own ``lag`` past values."""
    x = _values(x)
    y = _values(y)
    if len(x) != len(y):
        raise InsufficientLength(f"series lengths differ: {len(x)} vs {len(y)}")
    if lag < 1:
        raise ValueError("lag must be >= 1")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DegenerateSeries("series contain missing values")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise DegenerateSeries("constant series")
    t = len(y)
    df_den = t - lag - 2 * lag - 1
    if df_den < MIN_RESIDUAL_DOF:
        raise InsufficientLength(f"T={t} leaves {df_den} residual dof at lag {lag}")
    target = y[lag:]
    ones = np.ones((t - lag, 1))
    restricted = np.hstack([ones, _lagged(y, lag)])
    unrestricted = np.hstack([restricted, _lagged(x, lag)])
    rss_r = _ols_rss(restricted, target)
    rss_u = _ols_rss(unrestricted, target)
    if rss_u <= 0:
        raise SingularDesign("perfect fit of the unrestricted model")
    f_stat = max(0.0, ((rss_r - rss_u) / lag) / (rss_u / df_den))
    return GrangerFit(f_stat, stats.f_sf(f_stat, lag, df_den), rss_r, rss_u, lag, df_den)


def granger_test(x, y, lag: int) -> tuple[float, float]:
    fit = granger_fit(x, y, lag)
    return fit.F, fit.p


def best_lag_scan(x, y, lags: Iterable[int] = DEFAULT_LAGS, alpha: float = 0.05,
                  direction: Optional[Direction] = None) -> GrangerResult:
    """Scan lags; the best lag is the max-F lag among significant ones.

    Lags without enough residual degrees of freedom are skipped.  When no lag
    is significant, ``best_lag`` is None and F/p come from the max-F lag.
    """
    fits = []
    for lag in sorted(set(lags)):
        try:
            fits.append((lag, granger_fit(x, y, lag)))
        except (InsufficientLength, SingularDesign) as exc:
            logger.debug("lag %d skipped: %s", lag, exc)
    if not fits:
        raise AllLagsInfeasible("no lag in the scan is feasible")
    per_lag = tuple((lag, f.F, f.p) for lag, f in fits)
    significant = [(lag, f) for lag, f in fits if f.p < alpha]
    pool = significant or fits
    # max F, ties toward the smaller lag
    lag, fit = max(pool, key=lambda item: (item[1].F, -item[0]))
    return GrangerResult(direction, lag if significant else None, fit.F, fit.p,
                         bool(significant), lag, per_lag)


def classify_pair(m2p: GrangerResult, p2m: GrangerResult) -> PairClass:
    if m2p.direction not in (None, Direction.MEDIA_TO_PUBLIC) or p2m.direction not in (None, Direction.PUBLIC_TO_MEDIA):
        raise DirectionMismatch(f"expected (MediaToPublic, PublicToMedia), got ({m2p.direction}, {p2m.direction})")
    if m2p.significant and p2m.significant:
        return PairClass.BOTH
    if m2p.significant:
        return PairClass.MEDIA_CAUSES_PUBLIC
    if p2m.significant:
        return PairClass.PUBLIC_CAUSES_MEDIA
    return PairClass.NEITHER


def _difference(v: np.ndarray, order: int) -> np.ndarray:
    return np.diff(v, n=order) if order else v


@dataclass(frozen=True)
class PairOutcome:
    source: str
    target: str
    pair_class: Optional[PairClass] = None
    m2p: Optional[GrangerResult] = None
    p2m: Optional[GrangerResult] = None
    error: Optional[str] = None


def scan_pair(source: str, target: str, media, public, lags=DEFAULT_LAGS, alpha: float = 0.05,
              diff_order: int = 1) -> PairOutcome:
    """Both directions for one ordered country pair; failures are recorded,
    not raised."""
    try:
        m = _difference(_values(media), diff_order)
        p = _difference(_values(public), diff_order)
        try:
            m2p = best_lag_scan(m, p, lags, alpha, Direction.MEDIA_TO_PUBLIC)
            p2m = best_lag_scan(p, m, lags, alpha, Direction.PUBLIC_TO_MEDIA)
        except DegenerateSeries:
            which = []
            if not np.all(np.isfinite(m)) or np.ptp(m) == 0:
                which.append("media")
            if not np.all(np.isfinite(p)) or np.ptp(p) == 0:
                which.append("public")
            raise DegenerateSeries(f"degenerate {'/'.join(which) or 'input'} series")
        return PairOutcome(source, target, classify_pair(m2p, p2m), m2p, p2m)
    except AttnetError as exc:
        return PairOutcome(source, target, error=f"{type(exc).__name__}: {exc}")



def _run_pair(args) -> PairOutcome:
    return scan_pair(*args)


@dataclass
class GrangerMatrix:
    outcomes: dict  # (source, target) -> PairOutcome

    @property
    def classes(self) -> dict:
        return {k: o.pair_class for k, o in self.outcomes.items() if o.pair_class is not None}

    @property
    def errors(self) -> dict:
        return {k: o.error for k, o in self.outcomes.items() if o.error is not None}

    def counts(self) -> dict[str, int]:
        out = {c.value: 0 for c in PairClass}
        for c in self.classes.values():
            out[c.value] += 1
        return out


def granger_matrix(media: Mapping[tuple[str, str], Sequence[float]],
                   public: Mapping[tuple[str, str], Sequence[float]],
                   lags=DEFAULT_LAGS, alpha: float = 0.05, diff_order: int = 1,
                   workers: int = 1) -> GrangerMatrix:
    """Classify every ordered pair that has a series in either layer."""
    pairs = sorted(set(media) | set(public))
    outcomes: dict = {}
    tasks = []
    for s, t in pairs:
        if (s, t) not in media or (s, t) not in public:
            missing = "media" if (s, t) not in media else "public"
            outcomes[(s, t)] = PairOutcome(s, t, error=f"missing {missing} series")
            continue
        tasks.append((s, t, np.asarray(media[(s, t)], float), np.asarray(public[(s, t)], float),
                      tuple(lags), alpha, diff_order))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_pair, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        results = [_run_pair(t) for t in tasks]
    for r in results:
        outcomes[(r.source, r.target)] = r
    return GrangerMatrix({k: outcomes[k] for k in sorted(outcomes)})


GRANGER_HEADER = ("source", "target", "class", "m2p_lag", "m2p_F", "m2p_p", "p2m_lag", "p2m_F", "p2m_p")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def write_granger_csv(gm: GrangerMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GRANGER_HEADER)
        for (s, t), o in gm.outcomes.items():
            if o.pair_class is None:
                continue
            w.writerow([s, t, o.pair_class.value, _fmt(o.m2p.best_lag), _fmt(o.m2p.F), _fmt(o.m2p.p),
                        _fmt(o.p2m.best_lag), _fmt(o.p2m.F), _fmt(o.p2m.p)])


def write_granger_errors_csv(gm: GrangerMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "target", "error"])
        for (s, t), err in gm.errors.items():
            w.writerow([s, t, err])


def haversine_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    lat1, lon1 = map(math.radians, a)
    lat2, lon2 = map(math.radians, b)
    h = math.sin((lat2 - lat1) / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    return 2 * 6371.0088 * math.asin(math.sqrt(min(1.0, h)))


FEATURE_HEADER = (
    "source", "target", "class", "distance_km",
    "media_total", "media_mean", "media_std", "media_active_days",
    "public_mean", "public_std",
    "source_media_out_degree", "target_media_in_degree",
    "source_public_out_degree", "target_public_in_degree",
)


def feature_rows(gm: GrangerMatrix, media: Mapping, public: Mapping, mplex=None,
                 distance: Optional[Callable[[str, str], Optional[float]]] = None) -> list[list]:
    """Per-pair features for modelling pair classes outside this package."""
    rows = []
    for (s, t), o in gm.outcomes.items():
        m = np.asarray(media.get((s, t), []), float)
        p = np.asarray(public.get((s, t), []), float)
        p = p[np.isfinite(p)]
        row = [s, t, o.pair_class.value if o.pair_class else "",
               distance(s, t) if distance else None,
               float(m.sum()) if m.size else None, float(m.mean()) if m.size else None,
               float(m.std()) if m.size else None, int((m > 0).sum()) if m.size else None,
               float(p.mean()) if p.size else None, float(p.std()) if p.size else None]
        if mplex is not None:
            row += [len(mplex.media.successors.get(s, {})), len(mplex.media.predecessors.get(t, {})),
                    len(mplex.public.successors.get(s, {})), len(mplex.public.predecessors.get(t, {}))]
        else:
            row += [None] * 4
        rows.append(row)
    return rows


def write_feature_csv(rows: Iterable[list], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FEATURE_HEADER)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
