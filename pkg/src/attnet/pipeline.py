"""Stage orchestration, artifact emission and the run manifest."""
from __future__ import annotations

import csv
import dataclasses
import datetime as dt
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import causality, community, graphmetrics, motifs, netbuild, regions, stats, stitch, topics
from .errors import AttnetError, ConfigError, StageError
from .ingest import (
    DEFAULT_PERIOD,
    day_range,
    load_attention_events,
    load_embeddings,
    load_region_map,
    load_trends_windows,
)

logger = logging.getLogger(__name__)

STAGES = ("stitch", "build", "backbone", "metrics", "motifs", "communities", "regions", "granger", "topics")
TOPK = (1, 3, 5, 10)
LAYERS = (netbuild.MEDIA, netbuild.PUBLIC)

_NEEDS = {
    "regions": "regions",
    "topics": "embeddings",
}


@dataclass
class PipelineConfig:
    events: Optional[str] = None
    trends: Optional[str] = None
    regions: Optional[str] = None
    embeddings: Optional[str] = None
    capitals: Optional[str] = None
    output: str = "attnet-out"
    period: tuple = (DEFAULT_PERIOD[0].isoformat(), DEFAULT_PERIOD[1].isoformat())
    reference_target: str = "US"
    backbone_alpha: float = 0.05
    granger_alpha: float = 0.05
    lags: tuple = tuple(range(1, 15))
    diff_order: int = 1
    motif_ensemble: int = 1000
    motif_seed: int = 0
    swaps_per_edge: int = 10
    community_seed: int = 0
    community_restarts: int = 1
    teleport: float = 0.15
    region_network: str = "full"  # or "backbone"
    topk: tuple = TOPK
    topic_granger: tuple = ()
    stages: tuple = STAGES
    workers: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg = cls(**data)
        cfg.normalize()
        return cfg

    def normalize(self) -> None:
        self.period = tuple(str(p) for p in self.period)
        self.lags = tuple(int(x) for x in self.lags)
        self.topk = tuple(int(x) for x in self.topk)
        self.topic_granger = tuple(self.topic_granger)
        self.stages = tuple(self.stages)

    @property
    def period_dates(self) -> tuple[dt.date, dt.date]:
        return dt.date.fromisoformat(self.period[0]), dt.date.fromisoformat(self.period[1])

    def validate(self) -> None:
        self.normalize()
        bad = [s for s in self.stages if s not in STAGES]
        if bad:
            raise ConfigError(f"unknown stages: {', '.join(bad)}")
        try:
            start, end = self.period_dates
        except ValueError as exc:
            raise ConfigError(f"bad period {self.period}: {exc}") from None
        if end < start:
            raise ConfigError("period ends before it starts")
        if not 0 < self.backbone_alpha <= 1 or not 0 < self.granger_alpha < 1:
            raise ConfigError("alpha values must lie in (0, 1]")
        if not self.lags or min(self.lags) < 1:
            raise ConfigError("lags must be positive integers")
        if self.motif_ensemble < 2:
            raise ConfigError("motif_ensemble must be >= 2")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.region_network not in ("full", "backbone"):
            raise ConfigError("region_network must be 'full' or 'backbone'")
        if self.diff_order not in (0, 1, 2):
            raise ConfigError("diff_order must be 0, 1 or 2")
        if self.stages:
            for key in ("events", "trends"):
                self._require(key, "core stages")
        for stage, key in _NEEDS.items():
            if stage in self.stages:
                self._require(key, f"the {stage} stage")
        if self.topic_granger and not self.embeddings:
            raise ConfigError("topic_granger needs an embeddings file")
        if self.capitals:
            self._require("capitals", "distance features")

    def _require(self, key: str, why: str) -> None:
        value = getattr(self, key)
        if not value:
            raise ConfigError(f"{why} need a '{key}' input")
        if not Path(value).is_file():
            raise ConfigError(f"{key} file {value} does not exist")

    def public_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("output")
        d.pop("workers")  # must not influence outputs
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, (dt.date,)):
        return o.isoformat()
    raise TypeError(f"cannot serialize {type(o)}")


def load_capitals(path) -> dict[str, tuple[float, float]]:
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out[row["country"].strip()] = (float(row["lat"]), float(row["lon"]))
    return out


@dataclass
class RunSummary:
    output: Path
    files: list = field(default_factory=list)
    stages: dict = field(default_factory=dict)
    failed_stage: Optional[str] = None
    error: Optional[str] = None
    manifest: dict = field(default_factory=dict)


class _Run:
    """Lazily computed intermediates shared by the stages of one run."""

    def __init__(self, cfg: PipelineConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.files: list[Path] = []
        self._cache: dict[str, Any] = {}

    def file(self, name: str) -> Path:
        p = self.out / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.files.append(p)
        return p

    def get(self, key: str):
        if key not in self._cache:
            self._cache[key] = getattr(self, "_make_" + key)()
        return self._cache[key]

    # inputs
    def _make_events(self):
        return load_attention_events(self.cfg.events, self.cfg.period_dates)

    def _make_windows(self):
        return load_trends_windows(self.cfg.trends)

    def _make_region_map(self):
        return load_region_map(self.cfg.regions)

    def _make_embeddings(self):
        return load_embeddings(self.cfg.embeddings)

    def _make_series(self):
        return stitch.stitch_all(self.get("windows"), stitch.StitchConfig(self.cfg.reference_target))

    def _make_multiplex(self):
        return netbuild.build_multiplex(self.get("events"), self.get("series"), self.cfg.period_dates)

    def _make_backbones(self):
        mp = self.get("multiplex")
        params = netbuild.BackboneParams(self.cfg.backbone_alpha)
        return {layer: netbuild.disparity_backbone(mp.layer(layer), params) for layer in LAYERS}

    def _make_pair_series(self):
        """Daily media counts and stitched public volumes per ordered pair."""
        start, end = self.cfg.period_dates
        days = day_range(start, end)
        public = {}
        for s in self.get("series"):
            if s.source == s.target:
                continue
            if s.start_date != start or len(s.values) != len(days):
                raise AttnetError(f"{s.source}->{s.target} series does not span the period")
            public[(s.source, s.target)] = s.values
        media = media_series(self.get("events"), start, len(days), pairs=public.keys())
        return media, public


def media_series(events, start: dt.date, length: int, pairs=()) -> dict:
    """Zero-filled daily article counts per ordered pair."""
    out = {k: np.zeros(length) for k in pairs}
    for e in events:
        if e.source == e.target:
            continue
        i = (e.date - start).days
        if 0 <= i < length:
            out.setdefault((e.source, e.target), np.zeros(length))[i] += e.count
    return out


# ---- stages -------------------------------------------------------------


def _stage_stitch(run: _Run) -> dict:
    series = run.get("series")
    stitch.write_series_csv(series, run.file("stitched_series.csv"))
    return {"series": len(series), "gap_series": sum(s.gap for s in series),
            "max_seam": max((s.seam for s in series), default=0.0)}


def _stage_build(run: _Run) -> dict:
    mp = run.get("multiplex")
    netbuild.write_networks_csv([mp.media, mp.public], run.file("networks.csv"))
    return {"media_edges": mp.media.n_edges, "public_edges": mp.public.n_edges,
            "media_days": len(mp.daily_media), "public_days": len(mp.daily_public)}


def _stage_backbone(run: _Run) -> dict:
    mp = run.get("multiplex")
    bb = run.get("backbones")
    netbuild.write_networks_csv([bb[layer] for layer in LAYERS], run.file("backbone.csv"))
    info = {
        "alpha": run.cfg.backbone_alpha,
        "retention": {layer: netbuild.retention(mp.layer(layer), bb[layer]) for layer in LAYERS},
    }
    _dump_json(info, run.file("backbone_summary.json"))
    return info


def _stage_metrics(run: _Run) -> dict:
    mp = run.get("multiplex")
    bb = run.get("backbones")
    summaries = {}
    for layer in LAYERS:
        summaries[layer] = graphmetrics.network_summary(mp.layer(layer)).as_dict()
        summaries[f"backbone_{layer}"] = graphmetrics.network_summary(bb[layer]).as_dict()

    bb_mplex = netbuild.MultiplexAttention(bb[netbuild.MEDIA], bb[netbuild.PUBLIC])
    with open(run.file("centrality.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "measure", "value"])
        for layer in LAYERS:
            if bb[layer].n_nodes == 0:
                continue
            for measure in graphmetrics.MEASURES:
                vec = graphmetrics.centralities(bb[layer], measure)
                for node in sorted(vec.values):
                    w.writerow([node, f"{layer}.{measure}", repr(float(vec.values[node]))])
    alignment = {}
    for measure in graphmetrics.MEASURES:
        try:
            r = graphmetrics.spearman_centrality_alignment(bb_mplex, measure)
            alignment[measure] = {"rho": r.statistic, "p": r.p}
        except AttnetError as exc:
            alignment[measure] = {"error": str(exc)}

    media, public = mp.media, mp.public
    shared = sorted(n for n in media.nodes & public.nodes if media.successors[n] and public.successors[n])
    with open(run.file("topk_jaccard.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pair", "k", "jaccard"])
        for k in run.cfg.topk:
            for node in shared:
                j = graphmetrics.jaccard_topk(graphmetrics.topk_neighbors(media, node, k),
                                              graphmetrics.topk_neighbors(public, node, k))
                w.writerow([node, k, repr(float(j))])
    top1_diff = (sum(graphmetrics.topk_neighbors(media, n, 1) != graphmetrics.topk_neighbors(public, n, 1)
                     for n in shared) / len(shared)) if shared else None

    ginis = {layer: {} for layer in LAYERS}
    with open(run.file("gini.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "layer", "gini"])
        for layer in LAYERS:
            net = mp.layer(layer)
            for node in net.node_list:
                if net.successors[node]:
                    g = graphmetrics.gini_out_weights(net, node)
                    ginis[layer][node] = g
                    w.writerow([node, layer, repr(float(g))])
    gini_tests = {}
    gm, gp = ginis[netbuild.MEDIA], ginis[netbuild.PUBLIC]
    if gm and gp:
        mw = stats.mann_whitney_u(list(gp.values()), list(gm.values()))
        gini_tests["mann_whitney"] = {"U": mw.statistic, "p": mw.p, "method": mw.method}
        gini_tests["median"] = {netbuild.MEDIA: float(np.median(list(gm.values()))),
                                netbuild.PUBLIC: float(np.median(list(gp.values())))}
        both = sorted(set(gm) & set(gp))
        try:
            sp = stats.spearman([gm[n] for n in both], [gp[n] for n in both])
            gini_tests["spearman"] = {"rho": sp.statistic, "p": sp.p}
        except AttnetError as exc:
            gini_tests["spearman"] = {"error": str(exc)}
    info = {"summary": summaries, "centrality_alignment": alignment,
            "top1_divergence": top1_diff, "gini": gini_tests}
    _dump_json(info, run.file("metrics.json"))
    return {"top1_divergence": top1_diff}


def _stage_motifs(run: _Run) -> dict:
    bb = run.get("backbones")
    info = {}
    for layer in LAYERS:
        net = bb[layer]
        if net.n_edges < 2:
            info[layer] = "skipped: fewer than 2 backbone edges"
            continue
        zs = motifs.motif_zscores(net, run.cfg.motif_ensemble, run.cfg.motif_seed,
                                  run.cfg.swaps_per_edge, run.cfg.workers)
        motifs.write_motif_csv(zs, run.file(f"motifs_{layer}.csv"))
        info[layer] = {"ffl_z": zs[motifs.FFL]}
    return info


def _stage_communities(run: _Run) -> dict:
    bb = run.get("backbones")
    info = {}
    for layer in LAYERS:
        net = bb[layer]
        if net.n_nodes == 0:
            continue
        part = community.detect_communities(net, run.cfg.community_seed, run.cfg.teleport,
                                            run.cfg.community_restarts)
        community.write_partition_csv(part, run.file(f"communities_{layer}.csv"))
        info[layer] = {"codelength": part.codelength, "modules": part.n_modules}
    _dump_json({"seed": run.cfg.community_seed, "restarts": run.cfg.community_restarts,
                "teleport": run.cfg.teleport, "layers": info}, run.file("communities.json"))
    return info


def _stage_regions(run: _Run) -> dict:
    mp = run.get("multiplex")
    rm = run.get("region_map")
    if run.cfg.region_network == "backbone":
        nets = run.get("backbones")
    else:
        nets = {layer: mp.layer(layer) for layer in LAYERS}
    out = {}
    for layer in LAYERS:
        flow = regions.region_flow_matrix(nets[layer], rm)
        regions.write_region_csv(flow, run.file(f"regions_{layer}.csv"))
        out[layer] = {"zero_rows": list(flow.zero_rows), "row_gini": regions.row_ginis(flow)}
    try:
        res = regions.region_gini_compare(nets[netbuild.MEDIA], nets[netbuild.PUBLIC], rm)
        out["mann_whitney"] = {"U": res.statistic, "p": res.p, "method": res.method}
    except AttnetError as exc:
        out["mann_whitney"] = {"error": str(exc)}
    _dump_json(out, run.file("region_gini.json"))
    return {"mann_whitney": out["mann_whitney"]}


def _granger_run(run: _Run, media: dict, public: dict, prefix: str) -> dict:
    gm = causality.granger_matrix(media, public, run.cfg.lags, run.cfg.granger_alpha,
                                  run.cfg.diff_order, run.cfg.workers)
    causality.write_granger_csv(gm, run.file(f"{prefix}.csv"))
    causality.write_granger_errors_csv(gm, run.file(f"{prefix}_errors.csv"))
    return {"counts": gm.counts(), "errors": len(gm.errors), "matrix": gm}


def _stage_granger(run: _Run) -> dict:
    media, public = run.get("pair_series")
    res = _granger_run(run, media, public, "granger")
    distance = None
    if run.cfg.capitals:
        caps = load_capitals(run.cfg.capitals)

        def distance(a, b):
            if a in caps and b in caps:
                return causality.haversine_km(caps[a], caps[b])
            return None

    rows = causality.feature_rows(res["matrix"], media, public, run.get("multiplex"), distance)
    causality.write_feature_csv(rows, run.file("granger_features.csv"))
    info = {"counts": res["counts"], "errors": res["errors"]}
    _dump_json(info, run.file("granger_summary.json"))
    return info


def _stage_topics(run: _Run) -> dict:
    events = run.get("events")
    emb = run.get("embeddings")
    cache: dict = {}
    coverage, per_source = {}, {}
    for target in sorted({e.target for e in events}):
        src = topics.source_topics(events, target, emb, cache)
        if src:
            per_source[target] = src
            coverage[target] = topics.country_coverage_topic(events, target, emb, cache)
    topics.write_coverage_csv(coverage, run.file("coverage_topics.csv"))
    topics.write_source_topics_csv(per_source, run.file("coverage_source_topics.csv"))
    info: dict = {"covered_targets": len(coverage)}
    if run.cfg.topic_granger:
        _, public = run.get("pair_series")
        start, end = run.cfg.period_dates
        length = (end - start).days + 1
        for topic in run.cfg.topic_granger:
            filtered = topics.filter_events_by_topic(events, topic, emb, cache)
            media = media_series(filtered, start, length, pairs=public.keys())
            res = _granger_run(run, media, public, f"granger_topic_{topic}")
            info[f"granger_{topic}"] = res["counts"]
    return info


_STAGE_FUNCS = {
    "stitch": _stage_stitch,
    "build": _stage_build,
    "backbone": _stage_backbone,
    "metrics": _stage_metrics,
    "motifs": _stage_motifs,
    "communities": _stage_communities,
    "regions": _stage_regions,
    "granger": _stage_granger,
    "topics": _stage_topics,
}


def _jsonable(info):
    if isinstance(info, dict):
        return {k: _jsonable(v) for k, v in info.items() if k != "matrix"}
    if isinstance(info, (list, tuple)):
        return [_jsonable(v) for v in info]
    return info


def write_manifest(summary: RunSummary, cfg: PipelineConfig) -> dict:
    out = summary.output
    files = sorted({p for p in summary.files if p.exists()})
    manifest = {
        "generated_at": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
        "config": cfg.public_dict(),
        "seeds": {"motif_seed": cfg.motif_seed, "community_seed": cfg.community_seed},
        "stages": summary.stages,
        "partial": summary.failed_stage is not None,
        "failed_stage": summary.failed_stage,
        "error": summary.error,
        "files": {str(p.relative_to(out)): sha256_file(p) for p in files},
    }
    _dump_json(manifest, out / "manifest.json")
    summary.manifest = manifest
    return manifest


def run_pipeline(cfg: PipelineConfig, report: bool = True) -> RunSummary:
    """Run the enabled stages in order, then the report and manifest.

    Raises :class:`ConfigError` before any work when inputs are missing and
    :class:`StageError` (after writing a partial manifest) when a stage fails.
    """
    cfg.validate()
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    run = _Run(cfg, out)
    summary = RunSummary(out)
    try:
        for stage in STAGES:
            if stage not in cfg.stages:
                continue
            logger.info("stage %s", stage)
            try:
                info = _STAGE_FUNCS[stage](run)
            except Exception as exc:
                summary.failed_stage = stage
                summary.error = f"{type(exc).__name__}: {exc}"
                summary.stages[stage] = "failed"
                raise StageError(stage, exc) from exc
            summary.stages[stage] = _jsonable(info)
        if report:
            summary.files.extend(emit_report(out))
    finally:
        summary.files = run.files + [p for p in summary.files if p not in run.files]
        write_manifest(summary, cfg)
    return summary


# ---- report -------------------------------------------------------------


def _read_rows(path: Path) -> list[dict]:
    if not path.exists():
        return []
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def ecdf(values) -> list[tuple[float, float]]:
    """Distinct sorted values with the fraction of observations <= each."""
    vals = sorted(float(v) for v in values)
    n = len(vals)
    out = []
    for i, v in enumerate(vals):
        if i + 1 < n and vals[i + 1] == v:
            continue
        out.append((v, (i + 1) / n))
    return out


def _write_rows(path: Path, header, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return path


def emit_report(outdir, topk=TOPK) -> list[Path]:
    """Plot-ready CSVs derived from a run directory's artifacts.

    Missing artifacts yield header-only files.
    """
    out = Path(outdir)
    rep = out / "report"
    written = []

    jac = _read_rows(out / "topk_jaccard.csv")
    ks = sorted({int(r["k"]) for r in jac} | set(topk))
    for k in ks:
        vals = [r["jaccard"] for r in jac if int(r["k"]) == k]
        written.append(_write_rows(rep / f"jaccard_cdf_k{k}.csv", ["jaccard", "cdf"], ecdf(vals)))

    gini_rows = _read_rows(out / "gini.csv")
    for layer in LAYERS:
        vals = [r["gini"] for r in gini_rows if r["layer"] == layer]
        written.append(_write_rows(rep / f"gini_cdf_{layer}.csv", ["gini", "cdf"], ecdf(vals)))

    motif_rows = []
    for layer in LAYERS:
        for r in _read_rows(out / f"motifs_{layer}.csv"):
            motif_rows.append([layer, r["class"], r["z"]])
    written.append(_write_rows(rep / "motif_z.csv", ["layer", "class", "z"], motif_rows))

    for layer in LAYERS:
        src = out / f"regions_{layer}.csv"
        dest = rep / f"regions_{layer}.csv"
        if src.exists():
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_bytes(src.read_bytes())
            written.append(dest)
        else:
            written.append(_write_rows(dest, ["source_region", *regions.REGIONS], []))

    comm_rows = []
    for layer in LAYERS:
        for r in _read_rows(out / f"communities_{layer}.csv"):
            comm_rows.append([layer, r["node"], r["module"]])
    written.append(_write_rows(rep / "communities.csv", ["layer", "node", "module"], comm_rows))

    g_rows = [[r["source"], r["target"], r["class"]] for r in _read_rows(out / "granger.csv")]
    written.append(_write_rows(rep / "granger_classes.csv", ["source", "target", "class"], g_rows))
    return written
