"""Daily and aggregated attention networks and their disparity-filter backbones."""
from __future__ import annotations

import csv
import datetime as dt
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import PeriodMismatch
from .ingest import AttentionEvent
from .stitch import Series

MEDIA = "media"
PUBLIC = "public"


@dataclass(frozen=True, eq=False)
class AttentionNetwork:
    """Weighted directed graph of one attention layer.

    ``edges`` maps ``(source, target)`` to a positive weight.  Self-loops are
    never stored.
    """

    layer: str
    nodes: frozenset
    edges: Mapping[tuple[str, str], float]
    scope: str = ""

    def __post_init__(self):
        for (s, t), w in self.edges.items():
            if s == t:
                raise ValueError(f"self-loop {s}->{t} in {self.layer} network")
            if not w > 0:
                raise ValueError(f"non-positive weight {w} on {s}->{t}")
            if s not in self.nodes or t not in self.nodes:
                raise ValueError(f"edge {s}->{t} references a node outside the node set")

    @classmethod
    def from_edges(cls, layer: str, edges: Mapping[tuple[str, str], float], scope: str = "",
                   nodes: Optional[Iterable[str]] = None) -> "AttentionNetwork":
        all_nodes = set(nodes or ())
        for s, t in edges:
            all_nodes.add(s)
            all_nodes.add(t)
        ordered = {k: float(edges[k]) for k in sorted(edges)}
        return cls(layer, frozenset(all_nodes), ordered, scope)

    def __eq__(self, other):
        if not isinstance(other, AttentionNetwork):
            return NotImplemented
        return (self.layer, self.nodes, dict(self.edges), self.scope) == (
            other.layer, other.nodes, dict(other.edges), other.scope)

    __hash__ = None

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def node_list(self) -> list[str]:
        return sorted(self.nodes)

    @cached_property
    def successors(self) -> dict[str, dict[str, float]]:
        out: dict[str, dict[str, float]] = {n: {} for n in self.node_list}
        for (s, t), w in self.edges.items():
            out[s][t] = w
        return out

    @cached_property
    def predecessors(self) -> dict[str, dict[str, float]]:
        out: dict[str, dict[str, float]] = {n: {} for n in self.node_list}
        for (s, t), w in self.edges.items():
            out[t][s] = w
        return out

    def has_edge(self, s: str, t: str) -> bool:
        return (s, t) in self.edges

    def out_weights(self, node: str) -> dict[str, float]:
        return self.successors.get(node, {})

    def subgraph_edges(self, keep: Iterable[tuple[str, str]], scope: Optional[str] = None) -> "AttentionNetwork":
        keep = set(keep)
        edges = {k: w for k, w in self.edges.items() if k in keep}
        return AttentionNetwork(self.layer, self.nodes, edges, self.scope if scope is None else scope)

    def adjacency(self, weighted: bool = True) -> tuple[list[str], np.ndarray]:
        nodes = self.node_list
        index = {n: i for i, n in enumerate(nodes)}
        a = np.zeros((len(nodes), len(nodes)))
        for (s, t), w in self.edges.items():
            a[index[s], index[t]] = w if weighted else 1.0
        return nodes, a


@dataclass
class MultiplexAttention:
    media: AttentionNetwork
    public: AttentionNetwork
    daily_media: Optional[dict] = field(default=None, repr=False)
    daily_public: Optional[dict] = field(default=None, repr=False)

    def __post_init__(self):
        if self.media.scope != self.public.scope:
            raise PeriodMismatch(f"layers cover different scopes: {self.media.scope} / {self.public.scope}")

    def layer(self, name: str) -> AttentionNetwork:
        return {MEDIA: self.media, PUBLIC: self.public}[name]


def build_daily_media(events: Iterable[AttentionEvent]) -> dict[dt.date, AttentionNetwork]:
    per_day: dict[dt.date, dict] = defaultdict(lambda: defaultdict(float))
    for e in events:
        if e.source == e.target or e.count == 0:
            continue
        per_day[e.date][(e.source, e.target)] += e.count
    return {
        day: AttentionNetwork.from_edges(MEDIA, per_day[day], scope=day.isoformat())
        for day in sorted(per_day)
    }


def build_daily_public(series: Sequence[Series]) -> dict[dt.date, AttentionNetwork]:
    if not series:
        return {}
    start = series[0].start_date
    length = len(series[0].values)
    for s in series:
        if s.start_date != start or len(s.values) != length:
            raise PeriodMismatch(
                f"{s.source}->{s.target} covers {s.start_date}+{len(s.values)}d, expected {start}+{length}d")
    per_day: dict[int, dict] = defaultdict(dict)
    for s in series:
        if s.source == s.target:
            continue
        for i, v in enumerate(s.values):
            if v > 0:  # NaN compares false: gap days carry no edge
                per_day[i][(s.source, s.target)] = float(v)
    out = {}
    for i in sorted(per_day):
        day = start + dt.timedelta(days=i)
        out[day] = AttentionNetwork.from_edges(PUBLIC, per_day[i], scope=day.isoformat())
    return out


def aggregate(daily: Mapping, layer: Optional[str] = None, scope: Optional[str] = None) -> AttentionNetwork:
    """Superimpose daily networks: union of nodes and edges, summed weights."""
    totals: dict[tuple[str, str], float] = defaultdict(float)
    nodes: set = set()
    days = sorted(daily)
    for day in days:
        net = daily[day]
        layer = layer or net.layer
        nodes |= net.nodes
        for k, w in net.edges.items():
            totals[k] += w
    if scope is None:
        scope = f"{days[0].isoformat()}..{days[-1].isoformat()}" if days else ""
    return AttentionNetwork.from_edges(layer or MEDIA, totals, scope=scope, nodes=nodes)


@dataclass(frozen=True)
class BackboneParams:
    alpha: float = 0.05

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")


def disparity_pvalues(n: AttentionNetwork) -> dict[tuple[str, str], tuple[float, float]]:
    """Per-edge ``(out-side p, in-side p)`` under the disparity null model.

    For a node with ``k >= 2`` edges in one direction the edge share ``p``
    gets ``(1 - p) ** (k - 1)``; single-edge endpoints get 1.
    """
    out_p: dict[tuple[str, str], float] = {}
    in_p: dict[tuple[str, str], float] = {}
    for node, nbrs in n.successors.items():
        _side_pvalues(node, nbrs, out_p, outgoing=True)
    for node, nbrs in n.predecessors.items():
        _side_pvalues(node, nbrs, in_p, outgoing=False)
    return {k: (out_p[k], in_p[k]) for k in n.edges}


def _side_pvalues(node, nbrs, dest, outgoing):
    k = len(nbrs)
    if k == 0:
        return
    total = sum(nbrs.values())
    for other, w in nbrs.items():
        key = (node, other) if outgoing else (other, node)
        dest[key] = 1.0 if k < 2 else (1.0 - w / total) ** (k - 1)


def disparity_backbone(n: AttentionNetwork, p: BackboneParams = BackboneParams()) -> AttentionNetwork:
    """Keep edges significant at level ``alpha`` from either endpoint."""
    pv = disparity_pvalues(n)
    keep = [k for k, (po, pi) in pv.items() if po < p.alpha or pi < p.alpha]
    return n.subgraph_edges(keep)


def retention(original: AttentionNetwork, backbone: AttentionNetwork) -> float:
    return backbone.n_edges / original.n_edges if original.n_edges else 0.0


def build_multiplex(events: Iterable[AttentionEvent], series: Sequence[Series],
                    period: Optional[tuple[dt.date, dt.date]] = None) -> MultiplexAttention:
    daily_media = build_daily_media(events)
    daily_public = build_daily_public(series)
    if period is None:
        days = sorted(set(daily_media) | set(daily_public))
        period = (days[0], days[-1]) if days else (None, None)
    scope = f"{period[0]}..{period[1]}"
    return MultiplexAttention(
        aggregate(daily_media, MEDIA, scope), aggregate(daily_public, PUBLIC, scope),
        daily_media, daily_public,
    )


NETWORK_HEADER = ("layer", "source", "target", "weight")


def write_networks_csv(networks: Iterable[AttentionNetwork], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(NETWORK_HEADER)
        for net in networks:
            for (s, t), wt in sorted(net.edges.items()):
                w.writerow([net.layer, s, t, repr(float(wt))])


def read_networks_csv(path, scope: str = "") -> dict[str, AttentionNetwork]:
    edges: dict[str, dict] = defaultdict(dict)
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            edges[row["layer"]][(row["source"], row["target"])] = float(row["weight"])
    return {layer: AttentionNetwork.from_edges(layer, e, scope) for layer, e in edges.items()}
