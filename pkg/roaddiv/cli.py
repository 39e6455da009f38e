"""
roaddiv CLI entrypoint.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from .behavior import validate_trace
from .config import (
    DEFAULT_CONFIG_PATH,
    RoadDivConfigError,
    RunConfig,
    load_run_config,
)
from .corpus import load_roads, load_traces, write_corpus
from .correlation import (
    RQ4_MODES,
    correlation_matrix,
    rq2_pairwise_dm_correlation,
    rq3_length_effect,
    rq4_dm_bd_correlation,
)
from .exceptions import RoadDiversityException
from .models import CorrelationResult, ControlPointRoad, TestSuite
from .results import write_results
from .study import (
    StudyContext,
    additivity_experiment,
    bd_table,
    dm_table,
    efficiency_experiment,
    run_rq1,
    sample_suites,
    trace_features,
)
from .synthetic import SyntheticCorpusSpec, generate_synthetic_corpus, shorten_roads

logger = logging.getLogger(__name__)

CHECK = "✓"
LOG_FILENAME = "roaddiv.log"
SUITES_FILENAME = "suites.json"
STUDIES = ("rq1", "rq2", "rq3", "rq4")


class CLIError(RuntimeError):
    """CLI command failure."""


def _print(message: str = "") -> None:
    sys.stdout.write(f"{message}\n")


def _append_log(out_dir: Path, event: str, details: Dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    line = json.dumps(
        {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "event": event,
            "details": details,
        },
        sort_keys=True,
    )
    with (out_dir / LOG_FILENAME).open("a", encoding="utf-8") as handle:
        handle.write(f"{line}\n")


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    if args.config:
        config = load_run_config(args.config)
    elif Path(DEFAULT_CONFIG_PATH).exists():
        config = load_run_config(DEFAULT_CONFIG_PATH)
    else:
        config = RunConfig()
    overrides = {
        key: value
        for key, value in (
            ("seed", args.seed),
            ("output_dir", args.out),
            ("alignment", args.align),
            ("jobs", args.jobs),
        )
        if value is not None
    }
    if not overrides:
        return config
    try:
        return RunConfig.model_validate({**config.to_yaml_dict(), **overrides})
    except Exception as exc:
        raise RoadDivConfigError(str(exc)) from exc


def _load_pool(path: str, config: RunConfig) -> Tuple[List[ControlPointRoad], StudyContext]:
    roads, report = load_roads(path, config.catalogue.spacing, config.qa.min_turn_radius)
    if not roads:
        raise CLIError(f"no valid roads in {path}")
    if not report.valid:
        _print(f"Excluded {len(report.excluded)} roads (run `roaddiv validate` for details)")
    return roads, StudyContext.from_roads(roads, config)


def _read_suites(path: str) -> List[TestSuite]:
    file_path = Path(path)
    if not file_path.exists():
        raise CLIError(f"suite file not found: {file_path}")
    try:
        document = json.loads(file_path.read_text(encoding="utf-8"))
        return [TestSuite.model_validate(item) for item in document["suites"]]
    except (ValueError, KeyError, TypeError) as exc:
        raise CLIError(f"invalid suite file {file_path}: {exc}") from exc


def _write_suites(suites: Sequence[TestSuite], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"suites": [suite.model_dump(mode="json") for suite in suites]}
    path.write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")


def _check_suites(suites: Sequence[TestSuite], context: StudyContext) -> None:
    unknown = sorted({road_id for suite in suites for road_id in suite.road_ids} - set(context.ids))
    if unknown:
        preview = ", ".join(unknown[:5])
        raise CLIError(f"suites reference {len(unknown)} roads missing from the pool: {preview}")


def _sample(context: StudyContext, config: RunConfig, quantiles: Sequence[Optional[str]]) -> List[TestSuite]:
    suites: List[TestSuite] = []
    for quantile in quantiles:
        suites.extend(
            sample_suites(
                context.ids,
                config.sampling_plan(quantile),
                context.lengths(),
                skip_small=config.sampling.skip_small_pools,
            )
        )
    return suites


def _suites_for(
    args: argparse.Namespace,
    context: StudyContext,
    config: RunConfig,
    quantiles: Sequence[Optional[str]] = (None,),
) -> List[TestSuite]:
    if getattr(args, "suites", None):
        suites = _read_suites(args.suites)
    else:
        suites = _sample(context, config, quantiles)
    _check_suites(suites, context)
    return suites


def cmd_validate(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    roads, report = load_roads(args.roads, config.catalogue.spacing, config.qa.min_turn_radius)
    _print(f"{CHECK} Loaded {len(report.loaded)} roads from {args.roads}")
    for issue in report.excluded:
        _print(f"  excluded {issue.item_id}: {issue.reason}{f' ({issue.detail})' if issue.detail else ''}")
    for road_id in report.sharp_turns:
        _print(f"  sharp turn: {road_id} (max curvature {report.max_curvature[road_id]:.4f} 1/m)")

    invalid_traces = 0
    if args.traces:
        context = StudyContext.from_roads(roads, config)
        for trace in load_traces(args.traces):
            road = context.roads.get(trace.road_id)
            if road is None:
                _print(f"  trace {trace.road_id}/{trace.agent_id}: unknown road")
                invalid_traces += 1
                continue
            trace_report = validate_trace(trace, road, config.behavior)
            if not trace_report.valid:
                invalid_traces += 1
                flags = ", ".join(flag.value for flag in trace_report.flags)
                _print(f"  trace {trace.road_id}/{trace.agent_id}: {flags}")

    if args.report:
        report_path = Path(args.report)
        report_path.parent.mkdir(parents=True, exist_ok=True)
        report_path.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
        _print(f"{CHECK} Report written to {report_path}")

    out_dir = config.resolved_output_dir()
    _append_log(
        out_dir,
        "validate",
        {
            "roads": str(Path(args.roads).resolve()),
            "loaded": len(report.loaded),
            "excluded": len(report.excluded),
            "invalid_traces": invalid_traces,
        },
    )
    return 0 if report.valid and invalid_traces == 0 else 1


def cmd_sample(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    _, context = _load_pool(args.roads, config)
    quantiles = [None] if not args.length_quantile else [None, *args.length_quantile]
    suites = _sample(context, config, quantiles)
    out_dir = config.resolved_output_dir()
    path = out_dir / SUITES_FILENAME
    _write_suites(suites, path)
    _print(f"{CHECK} Wrote {len(suites)} suites to {path}")
    _append_log(out_dir, "sample", {"suites": len(suites), "seed": config.seed})
    return 0


def cmd_dm(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    _, context = _load_pool(args.roads, config)
    if args.ids:
        suites = [TestSuite(suite_id="cli", road_ids=[road_id.strip() for road_id in args.ids.split(",")])]
        _check_suites(suites, context)
    elif args.suites:
        suites = _suites_for(args, context, config)
    else:
        raise CLIError("pass --suites FILE or --ids a,b,c")
    table = dm_table(context, suites)
    out_dir = config.resolved_output_dir()
    write_results(out_dir, [], config=config, dm_table=table)
    _print(f"{CHECK} Computed {len(table.columns) - 5} measures for {len(suites)} suites")
    _append_log(out_dir, "dm", {"suites": len(suites)})
    return 0


def _rq4(
    context: StudyContext,
    suites: Sequence[TestSuite],
    traces_path: str,
    config: RunConfig,
    table: pd.DataFrame,
) -> Tuple[Dict[str, List[CorrelationResult]], pd.DataFrame]:
    features = trace_features(context, load_traces(traces_path))
    if not features:
        raise CLIError(f"no valid traces in {traces_path}")
    behavior = bd_table(context, suites, features)
    results: Dict[str, List[CorrelationResult]] = {}
    for agent_id in sorted(behavior["agent_id"].unique()):
        for mode, experiment in RQ4_MODES.items():
            results.setdefault(experiment.value, []).extend(
                rq4_dm_bd_correlation(table, behavior, agent_id, mode, config.correlation)
            )
    return results, behavior


def cmd_study(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    _, context = _load_pool(args.roads, config)
    studies = list(dict.fromkeys(args.studies))
    if "rq4" in studies and not args.traces:
        raise CLIError("study rq4 needs --traces")

    needs_lengths = "rq3" in studies or "rq4" in studies
    quantiles = (None, "shortest", "longest") if needs_lengths else (None,)
    suites = _suites_for(args, context, config, quantiles)
    unrestricted = [suite for suite in suites if suite.label == "all"]

    records = []
    correlations: Dict[str, List[CorrelationResult]] = {}
    table = behavior = None
    if "rq1" in studies:
        records = run_rq1(context, unrestricted)
        _print(f"{CHECK} RQ1: {len(records)} records")
    if any(study in studies for study in ("rq2", "rq3", "rq4")):
        table = dm_table(context, suites)
    if "rq2" in studies:
        correlations["rq2"] = rq2_pairwise_dm_correlation(
            table[table["label"] == "all"], config.correlation
        )
        _print(f"{CHECK} RQ2: {len(correlations['rq2'])} correlations")
    if "rq3" in studies:
        correlations["rq3"] = rq3_length_effect(table, config.correlation)
        _print(f"{CHECK} RQ3: {len(correlations['rq3'])} correlations")
    if "rq4" in studies:
        rq4_results, behavior = _rq4(context, suites, args.traces, config, table)
        correlations.update(rq4_results)
        _print(f"{CHECK} RQ4: {sum(len(r) for r in rq4_results.values())} correlations")

    out_dir = config.resolved_output_dir()
    manifest = write_results(out_dir, records, correlations, config, table, behavior)
    if "rq2" in studies:
        correlation_matrix(correlations["rq2"], _first_group(correlations["rq2"])).to_csv(
            out_dir / "rq2_matrix.csv", lineterminator="\n"
        )
    _print(f"{CHECK} Results written to {out_dir}")
    _append_log(
        out_dir,
        "study",
        {
            "studies": studies,
            "suites": len(suites),
            "records": manifest.record_count,
            "correlations": manifest.correlation_count,
            "config_hash": manifest.provenance.config_hash,
        },
    )
    return 0


def _first_group(results: Sequence[CorrelationResult]) -> str:
    return results[0].group if results else "all"


def cmd_bench(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    _, context = _load_pool(args.roads, config)
    suites = _suites_for(args, context, config)
    experiments = config.experiments
    records = efficiency_experiment(
        context, [suite for suite in suites if suite.size in experiments.efficiency_sizes]
    )
    records += additivity_experiment(
        context, [suite for suite in suites if suite.size in experiments.additivity_sizes]
    )
    out_dir = config.resolved_output_dir()
    write_results(out_dir, records, config=config)
    _print(f"{CHECK} Benchmarked {len(suites)} suites, {len(records)} records in {out_dir}")
    _append_log(out_dir, "bench", {"suites": len(suites), "records": len(records)})
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    spec = SyntheticCorpusSpec(
        road_count=args.roads,
        seed=config.seed,
        spacing=config.catalogue.spacing,
    )
    roads, traces = generate_synthetic_corpus(spec)
    if args.shorten:
        roads = roads + shorten_roads(roads, args.shorten, config.catalogue.spacing)
    out_dir = config.resolved_output_dir()
    manifest = write_corpus(roads, traces, out_dir)
    _print(f"{CHECK} Wrote {manifest.road_count} roads and {len(traces)} traces to {out_dir}")
    _append_log(out_dir, "synth", {"roads": manifest.road_count, "checksum": manifest.checksum})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roaddiv", description="Road diversity measures and studies")
    parser.add_argument("--seed", type=int, help="Override the run seed")
    parser.add_argument(
        "--config",
        help=f"Run config path (default: {DEFAULT_CONFIG_PATH} when present)",
    )
    parser.add_argument("--out", help="Output directory")
    parser.add_argument("--align", choices=["aligned", "raw", "both"], help="Alignment mode")
    parser.add_argument("--jobs", type=int, help="Worker processes for distance matrices")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    subparsers = parser.add_subparsers(dest="command", required=True)

    validate_parser = subparsers.add_parser("validate", help="Corpus QA report")
    validate_parser.add_argument("roads", help="Road document (JSON or YAML)")
    validate_parser.add_argument("--traces", help="Trace table to check against the roads")
    validate_parser.add_argument("--report", help="Write the QA report as JSON")
    validate_parser.set_defaults(func=cmd_validate)

    dm_parser = subparsers.add_parser("dm", help="Diversity catalogue for explicit suites")
    dm_parser.add_argument("roads", help="Road document")
    dm_parser.add_argument("--suites", help="Suite file written by `roaddiv sample`")
    dm_parser.add_argument("--ids", help="Comma-separated road ids forming one suite")
    dm_parser.set_defaults(func=cmd_dm)

    sample_parser = subparsers.add_parser("sample", help="Sample suites from a road pool")
    sample_parser.add_argument("roads", help="Road document")
    sample_parser.add_argument(
        "--length-quantile",
        nargs="+",
        choices=["shortest", "longest"],
        help="Also sample from the shortest/longest quantile of roads",
    )
    sample_parser.set_defaults(func=cmd_sample)

    study_parser = subparsers.add_parser("study", help="Run study pipelines")
    study_parser.add_argument("studies", nargs="+", choices=STUDIES, help="Pipelines to run")
    study_parser.add_argument("--roads", required=True, help="Road document")
    study_parser.add_argument("--traces", help="Trace table (required for rq4)")
    study_parser.add_argument("--suites", help="Suite file; sampled from the config when omitted")
    study_parser.set_defaults(func=cmd_study)

    bench_parser = subparsers.add_parser("bench", help="Efficiency and additivity only")
    bench_parser.add_argument("roads", help="Road document")
    bench_parser.add_argument("--suites", help="Suite file; sampled from the config when omitted")
    bench_parser.set_defaults(func=cmd_bench)

    synth_parser = subparsers.add_parser("synth", help="Generate a synthetic corpus")
    synth_parser.add_argument("--roads", type=int, default=200, help="Number of roads")
    synth_parser.add_argument(
        "--shorten",
        nargs="+",
        type=float,
        help="Also add copies cut to these fractions of their length",
    )
    synth_parser.set_defaults(func=cmd_synth)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors share the validation-failure code
        return 0 if exc.code in (0, None) else 1
    _configure_logging(args.verbose)
    try:
        return args.func(args)
    except RoadDivConfigError as exc:
        _print(f"Config error: {exc}")
        return 2
    except CLIError as exc:
        _print(f"Error: {exc}")
        return 1
    except RoadDiversityException as exc:
        _print(f"Fatal: {exc}")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
