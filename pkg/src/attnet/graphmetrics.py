"""Node and network statistics for attention networks."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import stats
from .errors import EmptyNetwork, InsufficientNodes, NoOutEdges, UnknownNode, ZeroMean
from .netbuild import AttentionNetwork, MultiplexAttention

MEASURES = ("degree", "betweenness", "eigenvector", "closeness")
DIRECTIONS = ("in", "out", "total")

EIGEN_RESTART = 1e-6
EIGEN_TOL = 1e-12
EIGEN_MAX_ITER = 10_000


@dataclass(frozen=True)
class CentralityVector:
    measure: str
    values: dict


@dataclass(frozen=True)
class NetworkSummary:
    n_nodes: int
    n_links: int
    mean_degree: float
    clustering: float
    assortativity: Optional[float]
    scc_fraction: float
    reciprocity: float

    def as_dict(self) -> dict:
        return {
            "N": self.n_nodes, "L": self.n_links, "mean_degree": self.mean_degree,
            "CC*": self.clustering, "assortativity*": self.assortativity,
            "SCC": self.scc_fraction, "reciprocity": self.reciprocity,
        }


def _neighbors(n: AttentionNetwork, direction: str) -> dict[str, list[str]]:
    if direction == "out":
        return {v: sorted(n.successors[v]) for v in n.node_list}
    if direction == "in":
        return {v: sorted(n.predecessors[v]) for v in n.node_list}
    return {v: sorted(set(n.successors[v]) | set(n.predecessors[v])) for v in n.node_list}


def _bfs_distances(adj: dict[str, list[str]], source: str) -> dict[str, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def betweenness(n: AttentionNetwork) -> dict[str, float]:
    """Unnormalized shortest-path betweenness on the unweighted digraph (Brandes)."""
    adj = _neighbors(n, "out")
    bc = dict.fromkeys(n.node_list, 0.0)
    for s in n.node_list:
        stack = []
        preds: dict[str, list[str]] = {v: [] for v in n.node_list}
        sigma = dict.fromkeys(n.node_list, 0.0)
        sigma[s] = 1.0
        dist = {s: 0}
        queue = deque([s])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w in adj[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = dict.fromkeys(n.node_list, 0.0)
        while stack:
            w = stack.pop()
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    return bc


def harmonic_closeness(n: AttentionNetwork, direction: str = "out") -> dict[str, float]:
    """Sum of reciprocal hop distances; ``out`` measures reach from the node,
    ``in`` reach towards it, ``total`` ignores edge direction."""
    adj = _neighbors(n, direction)
    out = {}
    for v in n.node_list:
        dist = _bfs_distances(adj, v)
        out[v] = math.fsum(1.0 / d for d in dist.values() if d > 0)
    return out


def eigenvector(n: AttentionNetwork, direction: str = "in", weighted: bool = True) -> dict[str, float]:
    """Principal eigenvector by power iteration with a small uniform restart.

    ``in`` uses the left eigenvector (scores flow along edge direction),
    ``out`` the right one, ``total`` the symmetrized adjacency.
    """
    nodes, a = n.adjacency(weighted)
    if direction == "out":
        a = a.T
    elif direction == "total":
        a = a + a.T
    size = len(nodes)
    x = np.full(size, 1.0 / math.sqrt(size))
    for _ in range(EIGEN_MAX_ITER):
        nxt = x @ a + EIGEN_RESTART * x.sum() / size
        norm = np.linalg.norm(nxt)
        nxt /= norm
        if np.abs(nxt - x).sum() < EIGEN_TOL:
            x = nxt
            break
        x = nxt
    return {v: float(x[i]) for i, v in enumerate(nodes)}


def degree(n: AttentionNetwork, direction: str = "total", weighted: bool = True) -> dict[str, float]:
    out = {}
    for v in n.node_list:
        parts = []
        if direction in ("out", "total"):
            parts.extend(n.successors[v].values() if weighted else [1.0] * len(n.successors[v]))
        if direction in ("in", "total"):
            parts.extend(n.predecessors[v].values() if weighted else [1.0] * len(n.predecessors[v]))
        out[v] = math.fsum(parts)
    return out


def centralities(n: AttentionNetwork, measure: str, direction: str = "total",
                 weighted: bool = True) -> CentralityVector:
    """Centrality of every node.

    Degree is weighted strength by default.  Betweenness always runs on the
    unweighted directed graph and ignores ``direction``.
    """
    if n.n_nodes == 0:
        raise EmptyNetwork(f"{n.layer} network has no nodes")
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    if measure == "degree":
        values = degree(n, direction, weighted)
    elif measure == "betweenness":
        values = betweenness(n)
    elif measure == "closeness":
        values = harmonic_closeness(n, direction)
    elif measure == "eigenvector":
        values = eigenvector(n, direction, weighted)
    else:
        raise ValueError(f"unknown measure {measure!r}")
    return CentralityVector(measure, values)


def topk_neighbors(n: AttentionNetwork, node: str, k: int) -> list[str]:
    """The ``k`` heaviest out-neighbours, ties by ascending code."""
    if node not in n.nodes:
        raise UnknownNode(node)
    ranked = sorted(n.successors[node].items(), key=lambda kv: (-kv[1], kv[0]))
    return [t for t, _ in ranked[:k]]


def jaccard_topk(a: Iterable[str], b: Iterable[str]) -> float:
    a, b = set(a), set(b)
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


def gini(x) -> float:
    """Mean-absolute-difference Gini of a non-negative vector."""
    x = np.asarray(x, dtype=float)
    size = len(x)
    if size == 0:
        raise NoOutEdges("empty weight vector")
    mean = x.mean()
    if mean == 0:
        raise ZeroMean("Gini undefined for an all-zero vector")
    # pairwise form keeps a uniform vector at exactly zero
    total = float(np.abs(x[:, None] - x[None, :]).sum())
    return total / (2.0 * size * size * float(mean))


def gini_out_weights(n: AttentionNetwork, node: str) -> float:
    if node not in n.nodes:
        raise UnknownNode(node)
    weights = list(n.successors[node].values())
    if not weights:
        raise NoOutEdges(f"{node} has no out-edges in the {n.layer} network")
    return gini(weights)


def strongly_connected_components(n: AttentionNetwork) -> list[set]:
    """Iterative Tarjan."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set = set()
    stack: list[str] = []
    comps = []
    counter = 0
    succ = {v: sorted(n.successors[v]) for v in n.node_list}
    for root in n.node_list:
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            v, i = work.pop()
            if i == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack.add(v)
            recurse = False
            nbrs = succ[v]
            while i < len(nbrs):
                w = nbrs[i]
                i += 1
                if w not in index:
                    work.append((v, i))
                    work.append((w, 0))
                    recurse = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == v:
                        break
                comps.append(comp)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return comps


def reciprocity(n: AttentionNetwork) -> float:
    if n.n_edges == 0:
        return 0.0
    mutual = sum(1 for (s, t) in n.edges if (t, s) in n.edges)
    return mutual / n.n_edges


def reciprocal_graph(n: AttentionNetwork) -> dict[str, set]:
    """Undirected graph of mutual links over all nodes."""
    adj: dict[str, set] = {v: set() for v in n.node_list}
    for (s, t) in n.edges:
        if (t, s) in n.edges:
            adj[s].add(t)
            adj[t].add(s)
    return adj


def average_clustering(adj: dict[str, set]) -> float:
    if not adj:
        return 0.0
    total = 0.0
    for v, nbrs in adj.items():
        k = len(nbrs)
        if k < 2:
            continue
        nb = sorted(nbrs)
        links = sum(1 for i, a in enumerate(nb) for b in nb[i + 1:] if b in adj[a])
        total += 2.0 * links / (k * (k - 1))
    return total / len(adj)


def degree_assortativity(adj: dict[str, set]) -> Optional[float]:
    xs, ys = [], []
    for v, nbrs in adj.items():
        for w in nbrs:
            xs.append(len(adj[v]))
            ys.append(len(adj[w]))
    if not xs:
        return None
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    sx, sy = x.std(), y.std()
    if sx == 0 or sy == 0:
        return None
    return float(((x - x.mean()) * (y - y.mean())).mean() / (sx * sy))


def network_summary(n: AttentionNetwork) -> NetworkSummary:
    """Table-style summary; CC* and assortativity use the mutual-link graph."""
    n_nodes = n.n_nodes
    adj = reciprocal_graph(n)
    comps = strongly_connected_components(n)
    largest = max((len(c) for c in comps), default=0)
    return NetworkSummary(
        n_nodes=n_nodes,
        n_links=n.n_edges,
        mean_degree=n.n_edges / n_nodes if n_nodes else 0.0,
        clustering=average_clustering(adj),
        assortativity=degree_assortativity(adj),
        scc_fraction=largest / n_nodes if n_nodes else 0.0,
        reciprocity=reciprocity(n),
    )


def spearman_centrality_alignment(mplex: MultiplexAttention, measure: str, direction: str = "total",
                                  weighted: bool = True) -> stats.TestResult:
    common = sorted(mplex.media.nodes & mplex.public.nodes)
    if len(common) < 3:
        raise InsufficientNodes(f"only {len(common)} nodes shared by both layers")
    cm = centralities(mplex.media, measure, direction, weighted).values
    cp = centralities(mplex.public, measure, direction, weighted).values
    return stats.spearman([cm[v] for v in common], [cp[v] for v in common])
