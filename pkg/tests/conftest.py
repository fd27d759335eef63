from __future__ import annotations

import datetime as dt

import numpy as np
import pytest

from attnet.ingest import TrendsWindow
from attnet.netbuild import AttentionNetwork


def make_window(source, start, end, values):
    start = dt.date.fromisoformat(start) if isinstance(start, str) else start
    end = dt.date.fromisoformat(end) if isinstance(end, str) else end
    return TrendsWindow(source, start, end, {k: tuple(v) for k, v in values.items()})


def random_digraph(rng: np.random.Generator, n: int, p: float, weighted: bool = True,
                   layer: str = "media") -> AttentionNetwork:
    nodes = [f"N{i:02d}" for i in range(n)]
    edges = {}
    for a in nodes:
        for b in nodes:
            if a != b and rng.random() < p:
                edges[(a, b)] = float(rng.integers(1, 20)) if weighted else 1.0
    return AttentionNetwork.from_edges(layer, edges, nodes=nodes)


def net(edges, layer="media", nodes=None):
    if isinstance(edges, (list, tuple)):
        edges = {e: 1.0 for e in edges}
    return AttentionNetwork.from_edges(layer, edges, nodes=nodes)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria outcomes, printed once at the end of the session
ACCEPTANCE: list[tuple[str, bool, str]] = []


def record(name: str, ok: bool, detail: str) -> None:
    ACCEPTANCE.append((name, ok, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
