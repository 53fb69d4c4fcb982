"""Command-line entry point: ``sparkperf {ingest,synth,featurize,experiment,report}``.

Every command is driven by an optional JSON config; flags override config
fields. Exit codes: 0 success, 1 usage or config error, 2 data error,
3 internal error. Output files are written atomically (temp file + rename)
and existing outputs are only replaced with ``--force``.
"""

from __future__ import annotations

import argparse
import glob
import json
import logging
import os
import sys
import tempfile
import traceback
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .data import PROFILES, Dataset
from .errors import ConfigError, DataError, SparkPerfError
from .evaluation import (
    EvaluationReport,
    ExperimentSpec,
    compare_models,
    parse_column_label,
    run_experiment,
)
from .features import FeatureSetKind, build_matrix, matrix_to_csv
from .ingest import ingest_log_directory, load_runs_csv, loads_dataset, runs_csv_text
from .models.params import ModelFamily, expand_grid
from .scenarios import ScenarioSplit, build_splits, case_number
from .synthgen import generate_runs, law_from_dict

log = logging.getLogger("sparkperf")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
FORMATS = ("json", "csv", "table")
ALL_MODELS = (
    "graybox:DT", "graybox:LR", "graybox:NN", "graybox:RF",
    "blackbox:DT", "blackbox:LR", "blackbox:NN", "blackbox:RF",
    "ernest",
)


# -- small helpers -------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """Usage errors become ConfigError so they map onto exit code 1."""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def atomic_write(path: str, text: str, force: bool = False) -> None:
    """Write ``text`` to ``path`` via a temp file in the same directory."""
    if os.path.exists(path) and not force:
        raise ConfigError(f"{path} exists (use --force to overwrite)")
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_config(path: Optional[str]) -> Tuple[dict, str]:
    """Parsed config and the directory relative paths resolve against."""
    if path is None:
        return {}, os.getcwd()
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return doc, os.path.dirname(os.path.abspath(path))


def parse_seed_list(text: Optional[str]) -> Optional[List[int]]:
    if text is None:
        return None
    try:
        seeds = [int(s) for s in text.replace(" ", "").split(",") if s]
    except ValueError:
        raise ConfigError(f"--seed-list must be comma-separated integers, got {text!r}") from None
    if not seeds:
        raise ConfigError("--seed-list is empty")
    return seeds


def _resolve(base: str, path: str) -> str:
    return path if os.path.isabs(path) else os.path.join(base, path)


def _profile(workload_id, problems: List[str]):
    if workload_id not in PROFILES:
        problems.append(f"workload_id must be one of {sorted(PROFILES)}, got {workload_id!r}")
        return None
    return PROFILES[workload_id]


def _check_outputs(paths: Sequence[str], force: bool) -> None:
    existing = [p for p in paths if os.path.exists(p)]
    if existing and not force:
        raise ConfigError(f"outputs exist (use --force to overwrite): {', '.join(existing)}")


# -- data sources ----------------------------------------------------------------


def check_data_source(src, base: str, profile, problems: List[str], seed_override=None) -> None:
    """Append every problem with a ``data`` config section to ``problems``."""
    if not isinstance(src, dict) or "source" not in src:
        problems.append("data: needs a 'source' of synthetic, csv, eventlogs or json")
        return
    kind = src["source"]
    if kind == "synthetic":
        _check_synthetic(src, profile, problems, "data", seed_override)
    elif kind in ("csv", "eventlogs", "json"):
        if "path" not in src:
            problems.append(f"data: {kind} source needs a 'path'")
        elif not os.path.exists(_resolve(base, src["path"])):
            problems.append(f"data: path {src['path']!r} does not exist")
        stages = src.get("stages")
        if kind == "csv" and stages and not os.path.exists(_resolve(base, stages)):
            problems.append(f"data: stages path {stages!r} does not exist")
    else:
        problems.append(f"data: unknown source {kind!r}")


def _check_synthetic(src, profile, problems, where, seed_override=None) -> None:
    doc = dict(src)
    if seed_override is not None:
        doc["seed"] = seed_override
    try:
        law_from_dict(doc)
    except ConfigError as exc:
        problems.append(f"{where}: {exc}")
    for key in ("core_grid", "size_grid", "replicates"):
        if key not in src:
            problems.append(f"{where}: missing {key!r}")
    if profile is not None and profile.has_tf_cores and src.get("tf_cores") is None:
        problems.append(f"{where}: workload {profile.workload_id} needs 'tf_cores'")


def load_data_source(src, base: str, profile, seed_override=None) -> Tuple[Dataset, list]:
    """Materialize a ``data`` section as ``(dataset, skipped_log_failures)``."""
    kind = src["source"]
    if kind == "synthetic":
        doc = dict(src)
        if seed_override is not None:
            doc["seed"] = seed_override
        ds = generate_runs(
            law_from_dict(doc),
            src["core_grid"],
            src["size_grid"],
            int(src["replicates"]),
            profile,
            tf_cores=src.get("tf_cores"),
            with_stages=bool(src.get("with_stages", True)),
        )
        return ds, []
    path = _resolve(base, src["path"])
    if kind == "csv":
        main = os.path.join(path, "runs.csv") if os.path.isdir(path) else path
        stages = src.get("stages")
        if stages:
            stages = _resolve(base, stages)
        elif os.path.isdir(path) and os.path.exists(os.path.join(path, "stages.csv")):
            stages = os.path.join(path, "stages.csv")
        return load_runs_csv(main, profile, stages), []
    if kind == "eventlogs":
        return ingest_log_directory(path, profile, skip_bad=bool(src.get("skip_bad", False)))
    with open(path, encoding="utf-8") as fh:
        ds = loads_dataset(fh.read())
    if ds.profile.workload_id != profile.workload_id:
        raise DataError(f"{path} holds {ds.profile.workload_id} runs, config says {profile.workload_id}")
    return ds, []


def _write_dataset(ds: Dataset, out: str, force: bool) -> List[str]:
    main, stages = runs_csv_text(ds)
    paths = [os.path.join(out, "runs.csv")]
    atomic_write(paths[0], main, force)
    if any(r.stages for r in ds.runs):
        paths.append(os.path.join(out, "stages.csv"))
        atomic_write(paths[1], stages, force)
    return paths


def dataset_summary(ds: Dataset, failures=()) -> dict:
    counts = Counter((r.data_size, r.spark_cores, r.tf_cores) for r in ds.runs)
    return {
        "workload_id": ds.profile.workload_id,
        "n_runs": len(ds.runs),
        "n_configurations": len(counts),
        "configurations": [
            {"data_size": s, "spark_cores": c, "tf_cores": tf, "runs": n}
            for (s, c, tf), n in sorted(counts.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2] or 0))
        ],
        "skipped": [{"file": f, "error": e} for f, e in failures],
    }


# -- ingest / synth / featurize ----------------------------------------------------


def cmd_ingest(args) -> int:
    cfg, base = load_config(args.config)
    if args.source is not None:
        cfg["path"], base = args.source, os.getcwd()
    if args.stages is not None:
        cfg["stages"] = args.stages
    if args.workload is not None:
        cfg["workload_id"] = args.workload
    if args.skip_bad:
        cfg["skip_bad"] = True
    out = args.out or cfg.get("out")

    problems: List[str] = []
    profile = _profile(cfg.get("workload_id"), problems)
    if "path" not in cfg:
        problems.append("ingest needs a source path (event-log directory or run CSV)")
    elif not os.path.exists(_resolve(base, cfg["path"])):
        problems.append(f"source {cfg['path']!r} does not exist")
    if not out:
        problems.append("ingest needs --out")
    if problems:
        raise ConfigError("\n".join(problems))

    path = _resolve(base, cfg["path"])
    src = {"path": path, "skip_bad": cfg.get("skip_bad", False)}
    if os.path.isdir(path) and not os.path.exists(os.path.join(path, "runs.csv")):
        src["source"] = "eventlogs"
    else:
        src["source"] = "csv"
        if cfg.get("stages"):
            src["stages"] = _resolve(base, cfg["stages"])
    _check_outputs([os.path.join(out, n) for n in ("runs.csv", "stages.csv", "summary.json")], args.force)
    ds, failures = load_data_source(src, base, profile)
    if not ds.runs:
        raise DataError("no runs could be ingested")
    for f, e in failures:
        log.warning("skipped %s: %s", f, e)
    _write_dataset(ds, out, args.force)
    summary = dataset_summary(ds, failures)
    atomic_write(os.path.join(out, "summary.json"), _dump(summary), args.force)
    print(
        f"ingested {summary['n_runs']} runs in {summary['n_configurations']} configurations"
        + (f" ({len(failures)} logs skipped)" if failures else "")
    )
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg, _ = load_config(args.config)
    seeds = parse_seed_list(args.seed_list)
    if seeds is not None and len(seeds) != 1:
        raise ConfigError("synth takes exactly one seed in --seed-list")
    seed = seeds[0] if seeds else None
    out = args.out or cfg.get("out")
    problems: List[str] = []
    profile = _profile(cfg.get("workload_id"), problems)
    _check_synthetic(cfg, profile, problems, "synth", seed)
    if not out:
        problems.append("synth needs --out")
    if problems:
        raise ConfigError("\n".join(problems))
    _check_outputs([os.path.join(out, n) for n in ("runs.csv", "stages.csv", "summary.json")], args.force)
    ds, _ = load_data_source(dict(cfg, source="synthetic"), os.getcwd(), profile, seed)
    _write_dataset(ds, out, args.force)
    summary = dataset_summary(ds)
    atomic_write(os.path.join(out, "summary.json"), _dump(summary), args.force)
    print(f"generated {summary['n_runs']} runs in {summary['n_configurations']} configurations")
    return EXIT_OK


def cmd_featurize(args) -> int:
    cfg, base = load_config(args.config)
    if args.data is not None:
        cfg["data"], base = {"source": "csv", "path": args.data}, os.getcwd()
    if args.workload is not None:
        cfg["workload_id"] = args.workload
    kinds = args.kind or cfg.get("kinds") or [k.value for k in FeatureSetKind]
    out = args.out or cfg.get("out")
    problems: List[str] = []
    profile = _profile(cfg.get("workload_id"), problems)
    check_data_source(cfg.get("data"), base, profile, problems)
    for k in kinds:
        if k not in [m.value for m in FeatureSetKind]:
            problems.append(f"unknown feature kind {k!r}")
    if not out:
        problems.append("featurize needs --out")
    if problems:
        raise ConfigError("\n".join(problems))
    targets = [os.path.join(out, f"features_{k}.{ext}") for k in kinds for ext in ("csv", "json")]
    _check_outputs(targets, args.force)
    ds, _ = load_data_source(cfg["data"], base, profile)
    for k in kinds:
        text, sidecar = matrix_to_csv(build_matrix(ds, FeatureSetKind(k)))
        atomic_write(os.path.join(out, f"features_{k}.csv"), text, args.force)
        atomic_write(os.path.join(out, f"features_{k}.json"), sidecar + "\n", args.force)
        print(f"wrote features_{k}.csv ({len(ds.runs)} rows)")
    return EXIT_OK


# -- experiment ---------------------------------------------------------------------


@dataclass(frozen=True)
class Cell:
    split: ScenarioSplit
    spec: ExperimentSpec
    grid: Optional[dict]

    @property
    def filename(self) -> str:
        return f"{self.spec.case_id}__{self.spec.label.replace(':', '-')}.json"


def _seeds_for(seeds_cfg, family: ModelFamily) -> Optional[List[int]]:
    if isinstance(seeds_cfg, list):
        return seeds_cfg
    if isinstance(seeds_cfg, dict):
        return seeds_cfg.get(family.value, seeds_cfg.get("default"))
    return None


def validate_experiment(cfg: dict, base: str, seed_list=None) -> List[str]:
    """Every problem with an experiment config (empty list when valid)."""
    problems: List[str] = []
    profile = _profile(cfg.get("workload_id"), problems)
    check_data_source(cfg.get("data"), base, profile, problems)

    sc = cfg.get("scenario")
    if not isinstance(sc, dict):
        problems.append("scenario: missing section")
    else:
        try:
            build_splits(
                sc.get("family"),
                sc.get("core_grid", []),
                int(sc.get("n_cases", 0)),
                sc.get("excluded_cores", ()),
                sc.get("train_sizes", ()),
                sc.get("test_sizes", ()),
            )
        except (SparkPerfError, ValueError, TypeError) as exc:
            problems.append(f"scenario: {exc}")

    models = cfg.get("models", list(ALL_MODELS))
    families = set()
    for m in models:
        try:
            families.add(parse_column_label(m)[1])
        except ConfigError as exc:
            problems.append(f"models: {exc}")

    grids = cfg.get("grids", {})
    for fam, grid in grids.items():
        try:
            expand_grid(ModelFamily(fam), grid)
        except (ValueError, TypeError, KeyError) as exc:
            problems.append(f"grids.{fam}: {exc}")

    seeds_cfg = seed_list if seed_list is not None else cfg.get("seeds")
    if seeds_cfg is None:
        problems.append("seeds: must be given explicitly (config 'seeds' or --seed-list)")
    else:
        for fam in sorted(families, key=lambda f: f.value):
            s = _seeds_for(seeds_cfg, fam)
            if not s or not all(isinstance(v, int) for v in s):
                problems.append(f"seeds: no integer seed list for model family {fam.value}")
    return problems


def plan_cells(cfg: dict, seed_list=None, only_cases=None, only_models=None) -> List[Cell]:
    sc = cfg["scenario"]
    splits = build_splits(
        sc["family"], sc["core_grid"], int(sc["n_cases"]), sc.get("excluded_cores", ()),
        sc.get("train_sizes", ()), sc.get("test_sizes", ()),
    )
    models = cfg.get("models", list(ALL_MODELS))
    if only_cases:
        known = {s.case_id for s in splits}
        bad = sorted(set(only_cases) - known)
        if bad:
            raise ConfigError(f"--only-case {bad} not among cases {sorted(known, key=case_number)}")
        splits = [s for s in splits if s.case_id in only_cases]
    if only_models:
        wanted = {parse_column_label(m) for m in only_models}
        bad = [m for m in only_models if parse_column_label(m) not in {parse_column_label(x) for x in models}]
        if bad:
            raise ConfigError(f"--only-model {bad} not among configured models")
        models = [m for m in models if parse_column_label(m) in wanted]
    seeds_cfg = seed_list if seed_list is not None else cfg["seeds"]
    grids = cfg.get("grids", {})
    cells = []
    for split in splits:
        for m in models:
            kind, fam = parse_column_label(m)
            spec = ExperimentSpec.make(cfg["workload_id"], split, kind, fam, seeds=_seeds_for(seeds_cfg, fam))
            cells.append(Cell(split, spec, grids.get(fam.value)))
    return cells


def _run_cell(ds: Dataset, cell: Cell):
    """Worker body: ``(report, None)`` or ``(None, (exit_code, message))``."""
    try:
        return run_experiment(ds, cell.split, cell.spec, cell.grid), None
    except ConfigError as exc:
        return None, (EXIT_CONFIG, str(exc))
    except SparkPerfError as exc:
        return None, (EXIT_DATA, str(exc))
    except Exception:  # noqa: BLE001 - reported, not swallowed
        return None, (EXIT_INTERNAL, traceback.format_exc())


def _run_cell_star(payload):
    return _run_cell(*payload)


def cmd_experiment(args) -> int:
    if args.config is None:
        raise ConfigError("experiment needs --config")
    cfg, base = load_config(args.config)
    seed_list = parse_seed_list(args.seed_list)
    problems = validate_experiment(cfg, base, seed_list)
    out = args.out or (cfg.get("out") and _resolve(base, cfg["out"]))
    if not out:
        problems.append("out: needs an output directory (config 'out' or --out)")
    if args.jobs < 1:
        problems.append("--jobs must be >= 1")
    if problems:
        raise ConfigError("config has {} problem(s):\n  ".format(len(problems)) + "\n  ".join(problems))

    cells = plan_cells(cfg, seed_list, args.only_case, args.only_model)
    targets = [os.path.join(out, "cells", c.filename) for c in cells]
    targets += [os.path.join(out, f"comparison.{ext}") for ext in ("json", "csv", "txt")]
    _check_outputs(targets, args.force)

    profile = PROFILES[cfg["workload_id"]]
    ds, failures = load_data_source(cfg["data"], base, profile)
    for f, e in failures:
        log.warning("skipped %s: %s", f, e)
    log.info("%d runs, %d cells", len(ds.runs), len(cells))

    if args.jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_cell_star, [(ds, c) for c in cells]))
    else:
        results = [_run_cell(ds, c) for c in cells]

    reports, worst = [], EXIT_OK
    for cell, (report, err) in zip(cells, results):
        if err is not None:
            code, msg = err
            worst = max(worst, code)
            print(f"error in {cell.spec.case_id} {cell.spec.label}: {msg}", file=sys.stderr)
            continue
        log.info("%s %s: %.3f%% (%.1fs)", cell.spec.case_id, cell.spec.label, report.mean_mape, report.wall_time)
        atomic_write(os.path.join(out, "cells", cell.filename), _dump(report.to_dict()), args.force)
        reports.append(report)

    if reports:
        table = compare_models(reports)
        atomic_write(os.path.join(out, "comparison.json"), table.to_json(), args.force)
        atomic_write(os.path.join(out, "comparison.csv"), table.to_csv(), args.force)
        atomic_write(os.path.join(out, "comparison.txt"), table.to_text(), args.force)
        sys.stdout.write(table.render(args.format))
    return worst


# -- report ---------------------------------------------------------------------------


def _report_files(paths: Sequence[str]) -> List[str]:
    files = []
    for p in paths:
        if os.path.isdir(p):
            cell_dir = os.path.join(p, "cells")
            files += sorted(glob.glob(os.path.join(cell_dir if os.path.isdir(cell_dir) else p, "*.json")))
        elif os.path.exists(p):
            files.append(p)
        else:
            raise ConfigError(f"report input {p!r} does not exist")
    if not files:
        raise DataError("no report files found")
    return files


def cmd_report(args) -> int:
    cfg, base = load_config(args.config)
    inputs = args.inputs or [_resolve(base, p) for p in cfg.get("inputs", [])]
    if not inputs:
        raise ConfigError("report needs at least one experiment directory or report file")
    reports = []
    for f in _report_files(inputs):
        try:
            with open(f, encoding="utf-8") as fh:
                reports.append(EvaluationReport.from_dict(json.load(fh)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{f}: not an evaluation report ({exc})") from None
    text = compare_models(reports).render(args.format)
    if args.out:
        atomic_write(args.out, text, args.force)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- entry point -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its fields")
    common.add_argument("--out", help="output directory (or file for 'report')")
    common.add_argument("--seed-list", help="comma-separated seeds overriding the config")
    common.add_argument("--format", choices=FORMATS, default="table", help="table output format")
    common.add_argument("--jobs", type=int, default=1, help="parallel experiment cells")
    common.add_argument("--force", action="store_true", help="overwrite existing outputs")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = _Parser(prog="sparkperf", description="Spark completion-time modelling experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", parents=[common], help="event logs or run CSVs -> canonical CSVs")
    p.add_argument("source", nargs="?", help="event-log directory (with manifest.csv) or run CSV")
    p.add_argument("--workload", choices=sorted(PROFILES))
    p.add_argument("--stages", help="stage CSV accompanying a run CSV")
    p.add_argument("--skip-bad", action="store_true", help="skip unparsable logs with a warning")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", parents=[common], help="synthetic runs from a law config")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("featurize", parents=[common], help="dataset -> feature matrices")
    p.add_argument("--data", help="directory holding runs.csv (and stages.csv)")
    p.add_argument("--workload", choices=sorted(PROFILES))
    p.add_argument("--kind", action="append", choices=[k.value for k in FeatureSetKind])
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("experiment", parents=[common], help="run every case x model cell")
    p.add_argument("--only-case", action="append", metavar="CASE", help="e.g. C1 (repeatable)")
    p.add_argument("--only-model", action="append", metavar="MODEL", help="e.g. blackbox:LR (repeatable)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", parents=[common], help="comparison table from cell reports")
    p.add_argument("inputs", nargs="*", help="experiment output directories or report files")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(message)s",
            stream=sys.stderr,
        )
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SparkPerfError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:  # noqa: BLE001
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
