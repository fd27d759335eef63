"""Directed triad census and Z-scores against a degree-preserving null model."""
from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import TooFewEdges
from .netbuild import AttentionNetwork
from .rng import stream

TRIAD_CLASSES = (
    "021D", "021U", "021C", "111D", "111U", "030T", "030C",
    "201", "120D", "120U", "120C", "210", "300",
)
FFL = "030T"
DOUBLE_FEEDBACK = "030C"


def _prototypes() -> dict[str, list[tuple[int, int]]]:
    # one representative edge set per connected class, nodes 0, 1, 2
    return {
        "021D": [(0, 1), (0, 2)],
        "021U": [(1, 0), (2, 0)],
        "021C": [(0, 1), (1, 2)],
        "111D": [(0, 1), (1, 0), (2, 0)],
        "111U": [(0, 1), (1, 0), (0, 2)],
        "030T": [(0, 1), (0, 2), (1, 2)],
        "030C": [(0, 1), (1, 2), (2, 0)],
        "201": [(0, 1), (1, 0), (0, 2), (2, 0)],
        "120D": [(0, 1), (1, 0), (2, 0), (2, 1)],
        "120U": [(0, 1), (1, 0), (0, 2), (1, 2)],
        "120C": [(0, 1), (1, 0), (0, 2), (2, 1)],
        "210": [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2)],
        "300": [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)],
    }


# bit of each ordered pair among the three triad members (a, b, c)
_PAIR_BITS = {(0, 1): 1, (1, 0): 2, (0, 2): 4, (2, 0): 8, (1, 2): 16, (2, 1): 32}


def _code(edges) -> int:
    return sum(_PAIR_BITS[e] for e in edges)


def _build_code_table() -> list[int]:
    """Map each 6-bit triad code to a class index, or -1 when disconnected."""
    table = [-1] * 64
    for idx, name in enumerate(TRIAD_CLASSES):
        proto = _prototypes()[name]
        for perm in itertools.permutations(range(3)):
            table[_code([(perm[a], perm[b]) for a, b in proto])] = idx
    return table


CODE_TABLE = _build_code_table()


@dataclass(frozen=True)
class TriadCensus:
    counts: tuple[int, ...]

    def __getitem__(self, name: str) -> int:
        return self.counts[TRIAD_CLASSES.index(name)]

    def as_dict(self) -> dict[str, int]:
        return dict(zip(TRIAD_CLASSES, self.counts))


def _index_graph(n: AttentionNetwork):
    nodes = n.node_list
    index = {v: i for i, v in enumerate(nodes)}
    succ = [set() for _ in nodes]
    for (s, t) in n.edges:
        succ[index[s]].add(index[t])
    return len(nodes), succ


def _census_from_succ(size: int, succ: Sequence[set]) -> list[int]:
    """Count connected triads once each via ordered neighbour merging."""
    nbrs = [set(s) for s in succ]
    for v in range(size):
        for w in succ[v]:
            nbrs[w].add(v)
    counts = [0] * len(TRIAD_CLASSES)
    for v in range(size):
        sv = succ[v]
        nv = nbrs[v]
        for u in nv:
            if u <= v:
                continue
            su = succ[u]
            for w in nv | nbrs[u]:
                if w == u or w == v:
                    continue
                # each connected triple is seen from exactly one (v, u, w)
                if not (u < w or (v < w < u and w not in nv)):
                    continue
                sw = succ[w]
                code = ((u in sv) | (v in su) << 1 | (w in sv) << 2 | (v in sw) << 3
                        | (w in su) << 4 | (u in sw) << 5)
                counts[CODE_TABLE[code]] += 1
    return counts


def triad_census(n: AttentionNetwork) -> TriadCensus:
    size, succ = _index_graph(n)
    return TriadCensus(tuple(_census_from_succ(size, succ)))


def _swap_edges(edges: list[tuple[int, int]], attempts: int, gen: np.random.Generator) -> list[tuple[int, int]]:
    edges = list(edges)
    present = set(edges)
    m = len(edges)
    picks = gen.integers(0, m, size=(attempts, 2))
    for i, j in picks.tolist():
        if i == j:
            continue
        a, b = edges[i]
        c, d = edges[j]
        # (a->b, c->d) becomes (a->d, c->b): out-degrees of a, c and in-degrees of b, d survive
        if a == d or c == b or a == c or b == d:
            continue
        if (a, d) in present or (c, b) in present:
            continue
        present.discard((a, b))
        present.discard((c, d))
        present.add((a, d))
        present.add((c, b))
        edges[i] = (a, d)
        edges[j] = (c, b)
    return edges


def randomize_degree_preserving(n: AttentionNetwork, swaps_per_edge: int = 10, seed: int = 0,
                                sample: Optional[int] = None) -> AttentionNetwork:
    """Directed double-edge swaps that keep every in- and out-degree.

    Swaps that would create a self-loop or duplicate edge are rejected.
    Weights follow their edge slot and carry no meaning in the result.
    """
    if n.n_edges < 2:
        raise TooFewEdges(f"need at least 2 edges to swap, got {n.n_edges}")
    nodes = n.node_list
    index = {v: i for i, v in enumerate(nodes)}
    keys = list(n.edges)
    edges = [(index[s], index[t]) for s, t in keys]
    gen = stream(seed) if sample is None else stream(seed, sample)
    swapped = _swap_edges(edges, swaps_per_edge * len(edges), gen)
    weights = [n.edges[k] for k in keys]
    new_edges = {(nodes[a], nodes[b]): w for (a, b), w in zip(swapped, weights)}
    return AttentionNetwork.from_edges(n.layer, new_edges, scope=n.scope, nodes=n.nodes)


@dataclass(frozen=True)
class MotifZScores:
    z: tuple[Optional[float], ...]
    real: tuple[int, ...]
    mean: tuple[float, ...]
    std: tuple[float, ...]
    ensemble_size: int
    seed: int

    def __getitem__(self, name: str) -> Optional[float]:
        return self.z[TRIAD_CLASSES.index(name)]


def _sample_census(args) -> list[int]:
    size, edges, swaps_per_edge, seed, index = args
    gen = stream(seed, index)
    swapped = _swap_edges(edges, swaps_per_edge * len(edges), gen)
    succ = [set() for _ in range(size)]
    for a, b in swapped:
        succ[a].add(b)
    return _census_from_succ(size, succ)


def motif_zscores(n: AttentionNetwork, ensemble_size: int = 1000, seed: int = 0,
                  swaps_per_edge: int = 10, workers: int = 1) -> MotifZScores:
    """Z-score of every triad class against ``ensemble_size`` randomized copies.

    Sample ``i`` draws from stream ``(seed, i)`` so the result does not
    depend on ``workers``.  A class whose ensemble has zero spread gets
    ``z = 0`` when the real count equals the ensemble mean and ``None``
    otherwise.
    """
    if ensemble_size < 2:
        raise ValueError("ensemble_size must be at least 2")
    if n.n_edges < 2:
        raise TooFewEdges(f"need at least 2 edges to randomize, got {n.n_edges}")
    size, succ = _index_graph(n)
    real = _census_from_succ(size, succ)
    edges = sorted((a, b) for a in range(size) for b in succ[a])
    tasks = [(size, edges, swaps_per_edge, seed, i) for i in range(ensemble_size)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(_sample_census, tasks, chunksize=max(1, ensemble_size // (4 * workers))))
    else:
        samples = [_sample_census(t) for t in tasks]
    arr = np.asarray(samples, dtype=float)
    mean = arr.mean(axis=0)
    std = arr.std(axis=0, ddof=1)
    z: list[Optional[float]] = []
    for c, mu, sd in zip(real, mean, std):
        if sd > 0:
            z.append(float((c - mu) / sd))
        elif c == mu:
            z.append(0.0)
        else:
            z.append(None)
    return MotifZScores(tuple(z), tuple(real), tuple(float(x) for x in mean),
                        tuple(float(x) for x in std), ensemble_size, seed)


def write_motif_csv(zs: MotifZScores, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["class", "count_real", "mean_rand", "std_rand", "z"])
        for i, name in enumerate(TRIAD_CLASSES):
            z = zs.z[i]
            w.writerow([name, zs.real[i], repr(float(zs.mean[i])), repr(float(zs.std[i])),
                        "undefined" if z is None else repr(float(z))])


def n_choose_3(n: int) -> int:
    return math.comb(n, 3)
