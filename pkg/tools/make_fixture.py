"""Regenerate the bundled 6-country fixture under src/attnet/data/fixture."""
from __future__ import annotations

import datetime as dt
import json
from pathlib import Path

import numpy as np

from attnet.causality import Direction
from attnet.simgen import Coupling, WorldSpec, write_world
from attnet.topics import TOPICS

OUT = Path(__file__).resolve().parents[1] / "src" / "attnet" / "data" / "fixture"

COUNTRIES = (("US", "Americas"), ("BR", "Americas"), ("FR", "Europe"),
             ("CN", "Asia"), ("NG", "Africa"), ("AU", "Oceania"))
CAPITALS = {"US": (38.9072, -77.0369), "BR": (-15.7939, -47.8828), "FR": (48.8566, 2.3522),
            "CN": (39.9042, 116.4074), "NG": (9.0765, 7.3986), "AU": (-35.2809, 149.13)}

# one cue word per topic, placed close to its topic vector
CUES = {"world": "summit", "politics": "election", "business": "market", "tech": "startup",
        "science": "climate", "health": "vaccine", "sports": "olympics", "arts": "festival",
        "style": "fashion", "food": "recipe", "travel": "visa"}

SPEC = WorldSpec(
    COUNTRIES,
    period_days=120,
    planted_couplings=(Coupling("FR", "US", Direction.MEDIA_TO_PUBLIC, 3, 0.8),),
    seed=7,
)


# each source has one dominant target per layer so the backbone is non-empty
MEDIA_HUBS = {"US": "CN", "BR": "US", "FR": "US", "CN": "US", "NG": "FR", "AU": "CN"}
PUBLIC_HUBS = {"US": "BR", "BR": "US", "FR": "US", "CN": "AU", "NG": "US", "AU": "US"}


def embeddings_text() -> str:
    dim = len(TOPICS)
    lines = []
    for i, topic in enumerate(TOPICS):
        base = np.zeros(dim)
        base[i] = 1.0
        lines.append((topic, base))
        cue = base.copy()
        cue[(i + 1) % dim] = 0.2
        lines.append((CUES[topic], cue))
    return "".join(f"{w} {' '.join(f'{x:.2f}' for x in v)}\n" for w, v in lines)


def pair_topics() -> dict:
    codes = SPEC.codes
    out = {}
    for i, s in enumerate(codes):
        for j, t in enumerate(codes):
            if s != t:
                a = TOPICS[(i + 2 * j) % len(TOPICS)]
                b = TOPICS[(3 * i + j) % len(TOPICS)]
                out[(s, t)] = (CUES[a], f"{CUES[b]} news")
    return out


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    write_world(SPEC, OUT, reference="US", topics=pair_topics(),
                media_level={(s, t): 60.0 for s, t in MEDIA_HUBS.items()},
                public_level={(s, t): 120.0 for s, t in PUBLIC_HUBS.items()})
    (OUT / "embeddings.txt").write_text(embeddings_text(), encoding="utf-8")
    (OUT / "capitals.csv").write_text(
        "country,lat,lon\n" + "".join(f"{c},{lat},{lon}\n" for c, (lat, lon) in CAPITALS.items()),
        encoding="utf-8")
    end = SPEC.period_days - 1
    start = dt.date(2016, 3, 7)
    config = {
        "events": "events.csv",
        "trends": "trends.csv",
        "regions": "regions.csv",
        "embeddings": "embeddings.txt",
        "capitals": "capitals.csv",
        "period": [start.isoformat(), (start + dt.timedelta(days=end)).isoformat()],
        "motif_ensemble": 200,
        "community_restarts": 3,
        "topic_granger": ["travel"],
    }
    (OUT / "config.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
