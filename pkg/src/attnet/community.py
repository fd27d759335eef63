"""Two-level map-equation community detection on weighted digraphs.

Node visit rates come from a random walk with uniform teleportation.  Link
flow counts only the recorded steps along edges,
``flow(i->j) = rate(i) * (1 - teleport) * w_ij / s_i``, so teleportation
never contributes to module entry or exit.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .errors import IncompletePartition, NonConvergence
from .netbuild import AttentionNetwork
from .rng import stream

MAX_ITER = 10_000
MIN_GAIN = 1e-12


@dataclass(frozen=True)
class VisitRates:
    rates: dict
    teleport: float


@dataclass(frozen=True)
class Partition:
    assignment: dict
    codelength: float = 0.0

    @property
    def n_modules(self) -> int:
        return len(set(self.assignment.values()))

    def modules(self) -> list[list[str]]:
        groups: dict[int, list[str]] = {}
        for node in sorted(self.assignment):
            groups.setdefault(self.assignment[node], []).append(node)
        return [groups[m] for m in sorted(groups)]


def _plogp(x: float) -> float:
    return x * math.log2(x) if x > 0 else 0.0


def transition_matrix(n: AttentionNetwork) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Row-stochastic walk matrix and the dangling-node mask."""
    nodes, a = n.adjacency(weighted=True)
    out = a.sum(axis=1)
    dangling = out == 0
    p = np.zeros_like(a)
    p[~dangling] = a[~dangling] / out[~dangling, None]
    return nodes, p, dangling


def visit_rates(n: AttentionNetwork, teleport: float = 0.15, tol: float = 1e-12) -> VisitRates:
    if n.n_nodes == 0:
        raise ValueError("visit rates need at least one node")
    if not 0 < teleport < 1:
        raise ValueError("teleport must lie in (0, 1)")
    nodes, p, dangling = transition_matrix(n)
    size = len(nodes)
    pi = np.full(size, 1.0 / size)
    for _ in range(MAX_ITER):
        nxt = (1 - teleport) * (pi @ p + pi[dangling].sum() / size) + teleport / size
        nxt /= nxt.sum()
        if np.abs(nxt - pi).sum() < tol:
            pi = nxt
            break
        pi = nxt
    else:
        raise NonConvergence(f"visit rates did not reach L1 tolerance {tol} in {MAX_ITER} iterations")
    return VisitRates({v: float(pi[i]) for i, v in enumerate(nodes)}, teleport)


def link_flows(n: AttentionNetwork, v: VisitRates) -> dict[tuple[str, str], float]:
    strength = {node: sum(nbrs.values()) for node, nbrs in n.successors.items()}
    scale = 1.0 - v.teleport
    return {(s, t): v.rates[s] * scale * w / strength[s] for (s, t), w in n.edges.items()}


def _codelength(node_flow: Mapping, flows: Mapping, assignment: Mapping) -> float:
    enter: dict = {}
    exit_: dict = {}
    mflow: dict = {}
    for node, f in node_flow.items():
        m = assignment[node]
        mflow[m] = mflow.get(m, 0.0) + f
        enter.setdefault(m, 0.0)
        exit_.setdefault(m, 0.0)
    for (s, t), f in flows.items():
        ms, mt = assignment[s], assignment[t]
        if ms != mt:
            exit_[ms] += f
            enter[mt] += f
    total_enter = sum(enter.values())
    length = _plogp(total_enter)
    for m in mflow:
        length += -_plogp(enter[m]) - _plogp(exit_[m]) + _plogp(exit_[m] + mflow[m])
    length -= sum(_plogp(f) for f in node_flow.values())
    return max(length, 0.0)


def map_equation(n: AttentionNetwork, v: VisitRates, p: Partition) -> float:
    """Two-level description length in bits: the index codebook uses module
    entry flows, each module codebook its node visits plus its exit flow."""
    missing = n.nodes - set(p.assignment)
    if missing:
        raise IncompletePartition(f"partition misses {sorted(missing)}")
    return _codelength(v.rates, link_flows(n, v), p.assignment)


class _Level:
    """Greedy move state over one level of super-nodes."""

    def __init__(self, flow: list[float], out_links: list[dict], in_links: list[dict]):
        self.flow = flow
        self.out_links = out_links
        self.in_links = in_links
        size = len(flow)
        self.out_total = [sum(d.values()) for d in out_links]
        self.in_total = [sum(d.values()) for d in in_links]
        self.module = list(range(size))
        self.mflow = list(flow)
        self.mexit = list(self.out_total)
        self.menter = list(self.in_total)
        self.members = [1] * size
        self.total_enter = sum(self.menter)

    @staticmethod
    def _term(enter: float, exit_: float, flow: float) -> float:
        return -_plogp(enter) - _plogp(exit_) + _plogp(exit_ + flow)

    def _delta(self, i, a, b, to_a, from_a, to_b, from_b):
        out_i, in_i, f = self.out_total[i], self.in_total[i], self.flow[i]
        exit_a = self.mexit[a] - (out_i - to_a) + from_a
        enter_a = self.menter[a] - (in_i - from_a) + to_a
        exit_b = self.mexit[b] + (out_i - to_b) - from_b
        enter_b = self.menter[b] + (in_i - from_b) - to_b
        total = self.total_enter - self.menter[a] - self.menter[b] + enter_a + enter_b
        delta = (_plogp(total) - _plogp(self.total_enter)
                 + self._term(enter_a, exit_a, self.mflow[a] - f)
                 - self._term(self.menter[a], self.mexit[a], self.mflow[a])
                 + self._term(enter_b, exit_b, self.mflow[b] + f)
                 - self._term(self.menter[b], self.mexit[b], self.mflow[b]))
        return delta, (exit_a, enter_a, exit_b, enter_b, total)

    def sweep(self, order) -> int:
        moves = 0
        for i in order:
            a = self.module[i]
            to_mod: dict[int, float] = {}
            from_mod: dict[int, float] = {}
            for j, f in self.out_links[i].items():
                to_mod[self.module[j]] = to_mod.get(self.module[j], 0.0) + f
            for j, f in self.in_links[i].items():
                from_mod[self.module[j]] = from_mod.get(self.module[j], 0.0) + f
            candidates = sorted((set(to_mod) | set(from_mod)) - {a})
            if self.members[a] > 1:
                empty = next((m for m in range(len(self.module)) if self.members[m] == 0), None)
                if empty is not None:
                    candidates = sorted(set(candidates) | {empty})
            to_a, from_a = to_mod.get(a, 0.0), from_mod.get(a, 0.0)
            best, best_b, best_state = -MIN_GAIN, None, None
            for b in candidates:
                d, state = self._delta(i, a, b, to_a, from_a, to_mod.get(b, 0.0), from_mod.get(b, 0.0))
                if d < best:
                    best, best_b, best_state = d, b, state
            if best_b is None:
                continue
            exit_a, enter_a, exit_b, enter_b, total = best_state
            f = self.flow[i]
            self.mexit[a], self.menter[a], self.mflow[a] = exit_a, enter_a, self.mflow[a] - f
            self.mexit[best_b], self.menter[best_b], self.mflow[best_b] = exit_b, enter_b, self.mflow[best_b] + f
            self.total_enter = total
            self.members[a] -= 1
            self.members[best_b] += 1
            self.module[i] = best_b
            moves += 1
        return moves


def _optimize(node_flow: list[float], links: dict, gen, max_sweeps: int = 200) -> list[int]:
    """Return a module index for every leaf node."""
    size = len(node_flow)
    leaf_to_super = list(range(size))
    flow = list(node_flow)
    cur_links = dict(links)
    while True:
        k = len(flow)
        out_links = [dict() for _ in range(k)]
        in_links = [dict() for _ in range(k)]
        for (s, t), f in cur_links.items():
            if s != t:
                out_links[s][t] = out_links[s].get(t, 0.0) + f
                in_links[t][s] = in_links[t].get(s, 0.0) + f
        level = _Level(flow, out_links, in_links)
        for _ in range(max_sweeps):
            order = gen.permutation(k).tolist()
            if level.sweep(order) == 0:
                break
        used = sorted(set(level.module), key=lambda m: min(i for i in range(k) if level.module[i] == m))
        if len(used) == k:
            break
        relabel = {m: r for r, m in enumerate(used)}
        new_of = [relabel[level.module[i]] for i in range(k)]
        leaf_to_super = [new_of[s] for s in leaf_to_super]
        new_flow = [0.0] * len(used)
        for i in range(k):
            new_flow[new_of[i]] += flow[i]
        new_links: dict = {}
        for (s, t), f in cur_links.items():
            key = (new_of[s], new_of[t])
            new_links[key] = new_links.get(key, 0.0) + f
        flow, cur_links = new_flow, new_links
    return leaf_to_super


def _dense(nodes: list[str], labels: Mapping[str, int]) -> dict[str, int]:
    remap: dict[int, int] = {}
    out = {}
    for v in nodes:
        out[v] = remap.setdefault(labels[v], len(remap))
    return out


def detect_communities(n: AttentionNetwork, seed: int = 0, teleport: float = 0.15,
                       restarts: int = 1) -> Partition:
    """Greedy map-equation minimization.

    Nodes start as singleton modules and move to the neighbouring module
    with the largest codelength decrease; converged modules are merged into
    super-nodes and the search repeats.  The best of ``restarts`` runs is
    returned, and the all-in-one partition wins if it codes shorter.
    """
    nodes = n.node_list
    if not nodes:
        raise ValueError("community detection needs at least one node")
    v = visit_rates(n, teleport)
    flows = link_flows(n, v)
    index = {x: i for i, x in enumerate(nodes)}
    node_flow = [v.rates[x] for x in nodes]
    links = {(index[s], index[t]): f for (s, t), f in flows.items()}

    best: Optional[Partition] = None
    for r in range(restarts):
        leaf = _optimize(node_flow, links, stream(seed, r))
        assignment = _dense(nodes, {x: leaf[i] for i, x in enumerate(nodes)})
        length = _codelength(v.rates, flows, assignment)
        if best is None or length < best.codelength - MIN_GAIN:
            best = Partition(assignment, length)
    one = dict.fromkeys(nodes, 0)
    one_length = _codelength(v.rates, flows, one)
    if one_length < best.codelength - MIN_GAIN:
        best = Partition(one, one_length)
    return best


def write_partition_csv(p: Partition, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "module"])
        for node in sorted(p.assignment):
            w.writerow([node, p.assignment[node]])
