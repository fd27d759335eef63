"""Region-level attention flows and their balance comparison."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import stats
from .errors import UnmappedCountry
from .graphmetrics import gini
from .ingest import REGIONS
from .netbuild import AttentionNetwork


@dataclass(frozen=True)
class RegionFlow:
    regions: tuple[str, ...]
    matrix: np.ndarray  # row-normalized; zero rows stay zero
    totals: np.ndarray  # un-normalized flows
    zero_rows: tuple[str, ...] = ()


def region_flow_matrix(n: AttentionNetwork, rm: Mapping[str, str],
                       regions: Sequence[str] = REGIONS) -> RegionFlow:
    """Summed attention between regions, normalized within each source region.

    Attention between two countries of the same region lands on the diagonal.
    """
    unmapped = [c for c in n.nodes if c not in rm]
    if unmapped:
        raise UnmappedCountry(unmapped)
    regions = tuple(regions)
    extra = {rm[c] for c in n.nodes} - set(regions)
    if extra:
        raise UnmappedCountry([f"{c}({rm[c]})" for c in n.nodes if rm[c] in extra])
    idx = {r: i for i, r in enumerate(regions)}
    totals = np.zeros((len(regions), len(regions)))
    for (s, t), w in n.edges.items():
        totals[idx[rm[s]], idx[rm[t]]] += w
    row_sums = totals.sum(axis=1)
    matrix = np.zeros_like(totals)
    nonzero = row_sums > 0
    matrix[nonzero] = totals[nonzero] / row_sums[nonzero, None]
    zero_rows = tuple(r for r, nz in zip(regions, nonzero) if not nz)
    return RegionFlow(regions, matrix, totals, zero_rows)


def row_ginis(flow: RegionFlow) -> dict[str, float]:
    """Gini of each non-zero outflow row."""
    return {r: gini(flow.matrix[i]) for i, r in enumerate(flow.regions) if r not in flow.zero_rows}


def region_gini_compare(media: AttentionNetwork, public: AttentionNetwork, rm: Mapping[str, str],
                        regions: Sequence[str] = REGIONS) -> stats.TestResult:
    """Two-sided Mann-Whitney U between the per-region outflow Ginis of the
    public layer (first sample) and the media layer."""
    g_media = row_ginis(region_flow_matrix(media, rm, regions))
    g_public = row_ginis(region_flow_matrix(public, rm, regions))
    return stats.mann_whitney_u(list(g_public.values()), list(g_media.values()))


def write_region_csv(flow: RegionFlow, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source_region", *flow.regions])
        for i, r in enumerate(flow.regions):
            w.writerow([r, *(repr(float(x)) for x in flow.matrix[i])])
