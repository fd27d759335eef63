"""Command-line entry point: one subcommand per stage plus ``run``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .errors import AttnetError, ConfigError, StageError
from .pipeline import STAGES, PipelineConfig, emit_report, run_pipeline

logger = logging.getLogger("attnet")

EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 1, 2

FIXTURE_DIR = Path(__file__).parent / "data" / "fixture"


def fixture_config(output: str = "attnet-out") -> PipelineConfig:
    """Config pointing at the bundled 6-country fixture."""
    cfg = PipelineConfig.from_dict(json.loads((FIXTURE_DIR / "config.json").read_text()))
    for key in ("events", "trends", "regions", "embeddings", "capitals"):
        value = getattr(cfg, key)
        if value:
            setattr(cfg, key, str(FIXTURE_DIR / value))
    cfg.output = output
    return cfg


def _parse_lags(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


# flag name -> (config key, converter)
_OVERRIDES = {
    "events": ("events", str),
    "trends": ("trends", str),
    "regions": ("regions", str),
    "embeddings": ("embeddings", str),
    "capitals": ("capitals", str),
    "out": ("output", str),
    "reference": ("reference_target", str),
    "alpha": ("backbone_alpha", float),
    "granger_alpha": ("granger_alpha", float),
    "lags": ("lags", _parse_lags),
    "diff_order": ("diff_order", int),
    "ensemble": ("motif_ensemble", int),
    "motif_seed": ("motif_seed", int),
    "community_seed": ("community_seed", int),
    "restarts": ("community_restarts", int),
    "region_network": ("region_network", str),
    "workers": ("workers", int),
}


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--fixture", action="store_true", help="use the bundled 6-country fixture")
    p.add_argument("--events")
    p.add_argument("--trends")
    p.add_argument("--regions", help="country,region CSV")
    p.add_argument("--embeddings", help="word-vector text file")
    p.add_argument("--capitals", help="country,lat,lon CSV for distance features")
    p.add_argument("--out", help="output directory")
    p.add_argument("--period", nargs=2, metavar=("START", "END"))
    p.add_argument("--reference", help="stitching reference country")
    p.add_argument("--alpha", help="disparity-filter significance level")
    p.add_argument("--granger-alpha")
    p.add_argument("--lags", help="e.g. 1-14 or 1,2,7")
    p.add_argument("--diff-order")
    p.add_argument("--ensemble", help="motif null-ensemble size")
    p.add_argument("--motif-seed")
    p.add_argument("--community-seed")
    p.add_argument("--restarts")
    p.add_argument("--region-network", choices=("full", "backbone"), help="network used for region flows")
    p.add_argument("--topic-granger", nargs="*", help="topics for topical Granger runs")
    p.add_argument("--workers", default=None, help="process count; does not change outputs")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="attnet", description="Media and public attention network analysis.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run every stage (or --stages subset), then the report")
    _add_pipeline_flags(run)
    run.add_argument("--stages", nargs="*", help=f"subset of {', '.join(STAGES)}")
    run.add_argument("--no-report", action="store_true")

    for stage in STAGES:
        sp = sub.add_parser(stage, help=f"run only the {stage} stage")
        _add_pipeline_flags(sp)

    rep = sub.add_parser("report", help="write plot-ready CSVs from a run directory")
    rep.add_argument("--out", required=True, help="run directory")

    sim = sub.add_parser("simgen", help="write a synthetic world in the input formats")
    sim.add_argument("--out", required=True)
    sim.add_argument("--countries", default="US:Americas,BR:Americas,FR:Europe,CN:Asia,NG:Africa,AU:Oceania",
                     help="comma-separated CODE:Region list")
    sim.add_argument("--coupling", action="append", default=[],
                     help="SRC,DST,m2p|p2m,LAG,COEF (repeatable)")
    sim.add_argument("--days", type=int, default=404)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--reference", default="US")
    return parser


def _config_from_args(args, stages: Sequence[str]) -> PipelineConfig:
    data: dict = {}
    if args.fixture:
        cfg = fixture_config()
        data = cfg.public_dict()
        data.update({k: getattr(cfg, k) for k in ("output", "workers")})
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config must be a JSON object")
        base = Path(args.config).parent
        for key in ("events", "trends", "regions", "embeddings", "capitals"):
            if loaded.get(key) and not Path(loaded[key]).is_absolute():
                loaded[key] = str(base / loaded[key])
        data.update(loaded)
    for flag, (key, conv) in _OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            try:
                data[key] = conv(value)
            except ValueError as exc:
                raise ConfigError(f"--{flag.replace('_', '-')}: {exc}") from None
    if args.period:
        data["period"] = list(args.period)
    if args.topic_granger is not None:
        data["topic_granger"] = args.topic_granger
    data["stages"] = list(stages)
    try:
        return PipelineConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _simgen(args) -> int:
    from .causality import Direction
    from .simgen import Coupling, WorldSpec, write_world

    try:
        countries = tuple(tuple(c.split(":", 1)) for c in args.countries.split(","))
        couplings = []
        for text in args.coupling:
            src, dst, d, lag, coef = text.split(",")
            direction = {"m2p": Direction.MEDIA_TO_PUBLIC, "p2m": Direction.PUBLIC_TO_MEDIA}[d]
            couplings.append(Coupling(src, dst, direction, int(lag), float(coef)))
        spec = WorldSpec(countries, period_days=args.days, planted_couplings=tuple(couplings), seed=args.seed)
        spec.validate()
    except (ValueError, KeyError, AttnetError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    paths = write_world(spec, args.out, args.reference)
    for name, p in paths.items():
        print(f"{name}: {p}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "simgen":
        return _simgen(args)
    if args.command == "report":
        out = Path(args.out)
        if not out.is_dir():
            print(f"config error: {out} is not a directory", file=sys.stderr)
            return EXIT_CONFIG
        for p in emit_report(out):
            print(p)
        return EXIT_OK

    if args.command == "run":
        stages = STAGES if args.stages is None else args.stages
    else:
        stages = (args.command,)
    try:
        cfg = _config_from_args(args, stages)
        summary = run_pipeline(cfg, report=args.command == "run" and not args.no_report)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return EXIT_STAGE
    print(json.dumps({"output": str(summary.output), "stages": summary.stages}, indent=2,
                     sort_keys=True, default=str))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
