from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import pytest

from attnet.cli import EXIT_CONFIG, EXIT_OK, EXIT_STAGE, fixture_config, main
from attnet.errors import ConfigError, StageError
from attnet.pipeline import STAGES, PipelineConfig, ecdf, emit_report, run_pipeline


def snapshot(root: Path) -> dict[str, bytes]:
    """Every artifact under ``root`` except the manifest."""
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file() and p.name != "manifest.json"}


def manifest(root: Path) -> dict:
    return json.loads((root / "manifest.json").read_text())


def rows(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def fixture_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("fx")
    assert main(["run", "--fixture", "--out", str(out)]) == EXIT_OK
    return out


def test_fixture_run_completes(fixture_run):
    m = manifest(fixture_run)
    assert not m["partial"] and m["failed_stage"] is None
    assert set(m["stages"]) == set(STAGES)
    assert m["seeds"] == {"motif_seed": 0, "community_seed": 0}
    assert "workers" not in m["config"] and "output" not in m["config"]


def test_manifest_lists_every_file_with_digest(fixture_run):
    files = manifest(fixture_run)["files"]
    on_disk = set(snapshot(fixture_run))
    assert set(files) == on_disk
    for rel, digest in files.items():
        assert hashlib.sha256((fixture_run / rel).read_bytes()).hexdigest() == digest


def test_manifest_stable_across_runs(fixture_run, tmp_path):
    assert main(["run", "--fixture", "--out", str(tmp_path)]) == EXIT_OK
    a, b = manifest(fixture_run), manifest(tmp_path)
    a.pop("generated_at"), b.pop("generated_at")
    assert a == b
    assert snapshot(fixture_run) == snapshot(tmp_path)


def test_workers_do_not_change_outputs(fixture_run, tmp_path):
    assert main(["run", "--fixture", "--out", str(tmp_path), "--workers", "4"]) == EXIT_OK
    assert snapshot(fixture_run) == snapshot(tmp_path)


def test_report_cdfs_monotone(fixture_run):
    for k in (1, 3, 5, 10):
        r = rows(fixture_run / "report" / f"jaccard_cdf_k{k}.csv")
        assert r
        xs = [float(x["jaccard"]) for x in r]
        ys = [float(x["cdf"]) for x in r]
        assert xs == sorted(xs) and len(set(xs)) == len(xs)
        assert ys == sorted(ys) and ys[-1] == 1.0 and ys[0] > 0
    for layer in ("media", "public"):
        r = rows(fixture_run / "report" / f"gini_cdf_{layer}.csv")
        assert [float(x["cdf"]) for x in r] == sorted(float(x["cdf"]) for x in r)


def test_report_contents(fixture_run):
    rep = fixture_run / "report"
    g = rows(rep / "granger_classes.csv")
    assert {"source": "FR", "target": "US", "class": "Both"} in g
    comm = rows(rep / "communities.csv")
    assert {r["layer"] for r in comm} == {"media", "public"}
    z = rows(rep / "motif_z.csv")
    assert len(z) == 26


def test_ecdf():
    assert ecdf([]) == []
    assert ecdf([3, 1, 1, 2]) == [(1.0, 0.5), (2.0, 0.75), (3.0, 1.0)]


def test_empty_run_gives_header_only_report(tmp_path):
    written = emit_report(tmp_path)
    assert written
    for p in written:
        lines = p.read_text().splitlines()
        assert len(lines) == 1 and "," in lines[0]


def test_empty_stage_list_runs(tmp_path):
    cfg = PipelineConfig(output=str(tmp_path), stages=())
    summary = run_pipeline(cfg, report=True)
    assert summary.stages == {}
    for rel in manifest(tmp_path)["files"]:
        assert rel.startswith("report/")


def test_disabled_stages_write_nothing(tmp_path):
    cfg = fixture_config(str(tmp_path))
    cfg.stages = ("stitch", "build")
    run_pipeline(cfg, report=False)
    produced = set(snapshot(tmp_path))
    assert produced == {"stitched_series.csv", "networks.csv"}


def test_single_stage_subcommand(tmp_path):
    assert main(["backbone", "--fixture", "--out", str(tmp_path)]) == EXIT_OK
    assert set(snapshot(tmp_path)) == {"backbone.csv", "backbone_summary.json"}
    assert list(manifest(tmp_path)["stages"]) == ["backbone"]


def test_missing_region_map_is_config_error(tmp_path, capsys):
    cfg = fixture_config(str(tmp_path / "out"))
    cfg.regions = None
    with pytest.raises(ConfigError):
        run_pipeline(cfg)
    assert not (tmp_path / "out").exists()
    code = main(["regions", "--fixture", "--regions", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o2")])
    assert code == EXIT_CONFIG
    assert not (tmp_path / "o2").exists()
    assert "regions" in capsys.readouterr().err


def test_regions_not_needed_when_stage_disabled(tmp_path):
    cfg = fixture_config(str(tmp_path))
    cfg.regions = None
    cfg.stages = ("stitch",)
    run_pipeline(cfg, report=False)


@pytest.mark.parametrize("argv", [
    ["run", "--fixture", "--alpha", "abc"],
    ["run", "--fixture", "--period", "2016-05-01", "2016-04-01"],
    ["run", "--fixture", "--stages", "stitch", "plot"],
    ["run", "--fixture", "--ensemble", "1"],
    ["run", "--fixture", "--lags", "0-3"],
])
def test_bad_flags_exit_1(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_unknown_config_key(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"bogus": 1}))
    assert main(["run", "--config", str(p)]) == EXIT_CONFIG
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict({"bogus": 1})


def test_stage_failure_exit_2_with_partial_manifest(tmp_path, capsys):
    src = fixture_config().events
    bad = tmp_path / "events.csv"
    text = Path(src).read_text().splitlines()
    bad.write_text("\n".join(text[:3] + ["garbage,row"] + text[3:]) + "\n")
    out = tmp_path / "out"
    code = main(["run", "--fixture", "--events", str(bad), "--out", str(out)])
    assert code == EXIT_STAGE
    assert "build" in capsys.readouterr().err
    m = manifest(out)
    assert m["partial"] and m["failed_stage"] == "build" and m["error"]
    assert m["stages"]["stitch"] and m["stages"]["build"] == "failed"
    assert set(m["files"]) == set(snapshot(out))
    assert "stitched_series.csv" in m["files"]


def test_stage_error_carries_stage_name(tmp_path):
    cfg = fixture_config(str(tmp_path))
    cfg.reference_target = "ZZ"
    cfg.stages = ("stitch",)
    with pytest.raises(StageError) as info:
        run_pipeline(cfg)
    assert info.value.stage == "stitch"


def test_config_file_with_overrides(tmp_path):
    fx = fixture_config()
    cfg = {"events": fx.events, "trends": fx.trends, "period": list(fx.period),
           "motif_ensemble": 20, "backbone_alpha": 0.5}
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    out = tmp_path / "out"
    code = main(["run", "--config", str(p), "--alpha", "0.2", "--stages", "backbone", "--no-report",
                 "--out", str(out)])
    assert code == EXIT_OK
    m = manifest(out)
    assert m["config"]["backbone_alpha"] == 0.2
    assert m["config"]["motif_ensemble"] == 20
    assert not (out / "report").exists()


def test_config_relative_paths(tmp_path):
    fx = fixture_config()
    for key in ("events", "trends"):
        (tmp_path / f"{key}.csv").write_bytes(Path(getattr(fx, key)).read_bytes())
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"events": "events.csv", "trends": "trends.csv", "period": list(fx.period)}))
    assert main(["stitch", "--config", str(p), "--out", str(tmp_path / "o")]) == EXIT_OK


def test_report_subcommand(fixture_run, tmp_path, capsys):
    assert main(["report", "--out", str(tmp_path / "missing")]) == EXIT_CONFIG
    assert main(["report", "--out", str(fixture_run)]) == EXIT_OK
    assert "granger_classes.csv" in capsys.readouterr().out


def test_simgen_planted_pair_reaches_granger_report(tmp_path):
    world = tmp_path / "world"
    code = main(["simgen", "--out", str(world), "--countries", "US:Americas,FR:Europe,CN:Asia,NG:Africa",
                 "--coupling", "FR,US,m2p,3,0.8", "--seed", "3"])
    assert code == EXIT_OK
    out = tmp_path / "out"
    code = main(["run", "--events", str(world / "events.csv"), "--trends", str(world / "trends.csv"),
                 "--regions", str(world / "regions.csv"), "--stages", "stitch", "granger", "--out", str(out)])
    assert code == EXIT_OK
    found = {(r["source"], r["target"]): r for r in rows(out / "granger.csv")}
    hit = found[("FR", "US")]
    assert hit["class"] in ("MediaCausesPublic", "Both")


@pytest.mark.parametrize("coupling", ["FR,US,x2y,3,0.8", "FR,US,m2p,3", "FR,XX,m2p,3,0.5"])
def test_simgen_bad_coupling(coupling, tmp_path):
    assert main(["simgen", "--out", str(tmp_path), "--countries", "US:Americas,FR:Europe",
                 "--coupling", coupling]) == EXIT_CONFIG


def test_region_network_switch(fixture_run, tmp_path):
    assert main(["regions", "--fixture", "--region-network", "backbone", "--out", str(tmp_path)]) == EXIT_OK
    assert manifest(tmp_path)["config"]["region_network"] == "backbone"
    full = (fixture_run / "regions_media.csv").read_bytes()
    assert (tmp_path / "regions_media.csv").read_bytes() != full
    cfg = fixture_config(str(tmp_path / "x"))
    cfg.region_network = "core"
    with pytest.raises(ConfigError):
        run_pipeline(cfg)
