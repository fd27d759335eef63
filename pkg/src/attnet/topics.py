"""Topic labels for co-mentions via word-vector cosine similarity."""
from __future__ import annotations

import csv
from collections import Counter, defaultdict
from typing import Iterable, Optional

import numpy as np

from .errors import EmptyPhrase, NoCoverage
from .ingest import AttentionEvent, EmbeddingTable

TOPICS = ("world", "politics", "business", "tech", "science", "health",
          "sports", "arts", "style", "food", "travel")
UNKNOWN = "Unknown"


def _unit(v: np.ndarray) -> Optional[np.ndarray]:
    norm = float(np.linalg.norm(v))
    return None if norm == 0 else v / norm


def infer_topic(phrase: str, emb: EmbeddingTable, topics: Iterable[str] = TOPICS) -> str:
    """Topic whose own word vector is most cosine-similar to the mean of the
    phrase's in-vocabulary token vectors.

    Ties go to the alphabetically first topic; a phrase with no known token
    (or a topic set absent from the table) gives ``"Unknown"``.
    """
    tokens = phrase.lower().split()
    if not tokens:
        raise EmptyPhrase("phrase is empty")
    vecs = [emb.get(t) for t in tokens]
    vecs = [v for v in vecs if v is not None]
    if not vecs:
        return UNKNOWN
    query = _unit(np.mean(vecs, axis=0))
    if query is None:
        return UNKNOWN
    best, best_sim = UNKNOWN, -np.inf
    for topic in sorted(topics):
        tv = emb.get(topic)
        if tv is None:
            continue
        unit = _unit(tv)
        if unit is None:
            continue
        sim = float(query @ unit)
        if sim > best_sim:
            best, best_sim = topic, sim
    return best


def _modal(counter: Counter) -> str:
    top = max(counter.values())
    return min(k for k, c in counter.items() if c == top)


def source_topics(events: Iterable[AttentionEvent], target: str, emb: EmbeddingTable,
                  cache: Optional[dict] = None) -> dict[str, str]:
    """Modal co-mention topic of each source country's coverage of ``target``."""
    cache = {} if cache is None else cache
    per_source: dict[str, Counter] = defaultdict(Counter)
    for e in events:
        if e.target != target or e.source == target:
            continue
        for phrase in e.co_mentions:
            if phrase not in cache:
                cache[phrase] = infer_topic(phrase, emb)
            topic = cache[phrase]
            if topic != UNKNOWN:
                per_source[e.source][topic] += 1
    return {s: _modal(c) for s, c in sorted(per_source.items()) if c}


def country_coverage_topic(events: Iterable[AttentionEvent], target: str, emb: EmbeddingTable,
                           cache: Optional[dict] = None) -> str:
    """Topic featured by the most source countries in their coverage of ``target``."""
    per_source = source_topics(events, target, emb, cache)
    if not per_source:
        raise NoCoverage(f"no in-vocabulary co-mentions about {target}")
    return _modal(Counter(per_source.values()))


def filter_events_by_topic(events: Iterable[AttentionEvent], topic: str, emb: EmbeddingTable,
                           cache: Optional[dict] = None) -> list[AttentionEvent]:
    """Events with at least one co-mention labelled ``topic``."""
    cache = {} if cache is None else cache
    out = []
    for e in events:
        for phrase in e.co_mentions:
            if phrase not in cache:
                cache[phrase] = infer_topic(phrase, emb)
            if cache[phrase] == topic:
                out.append(e)
                break
    return out


def write_coverage_csv(rows: dict[str, str], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["target", "topic"])
        for target in sorted(rows):
            w.writerow([target, rows[target]])


def write_source_topics_csv(rows: dict[str, dict[str, str]], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["target", "source", "topic"])
        for target in sorted(rows):
            for source in sorted(rows[target]):
                w.writerow([target, source, rows[target][source]])
