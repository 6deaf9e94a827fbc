"""Command-line pipeline: ingest, normalize, search weights, evaluate, report.

Exit codes: 0 success, 2 usage error, 3 data error, 4 optimization abort.
All artifacts are written atomically (temp file then rename) and a failed run
removes whatever it had already written to the output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .evaluation import EvalReport, UndefinedMetricError, map_at_k
from .fusion import fuse, make_mse_objective, save_weights
from .ingestion import (
    IngestionError,
    InducerTable,
    apply_minmax,
    assemble,
    fit_minmax,
    load_ground_truth,
    read_inducer_csv,
    save_normalization,
)
from .optimizers import (
    METHOD_PARAM_KEYS,
    METHODS,
    NonFiniteObjectiveError,
    OptimizerConfig,
    OptimizerReport,
    optimize,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_ABORT = 4

CONFIG_KEYS = ("max_iterations", "tolerance")

GROUND_TRUTH_BASENAME = "ground_truth.csv"


class UsageError(ValueError):
    """Bad flags or option values; maps to exit code 2."""


@dataclass
class RunManifest:
    method: str
    dev_paths: list[str]
    test_paths: list[str]
    truth_paths: list[str]
    out_dir: str
    k: int = 10
    seed: int = 0
    overrides: dict = field(default_factory=dict)
    trace: bool = False

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise UsageError(f"unknown method {self.method!r}; choose one of {sorted(METHODS)}")
        if self.k < 1:
            raise UsageError("k must be >= 1")
        if not self.dev_paths or not self.test_paths or not self.truth_paths:
            raise UsageError("dev, test, and truth paths are all required")

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "dev_paths": list(self.dev_paths),
            "test_paths": list(self.test_paths),
            "truth_paths": list(self.truth_paths),
            "out_dir": self.out_dir,
            "k": self.k,
            "seed": self.seed,
            "overrides": dict(self.overrides),
            "trace": self.trace,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RunManifest":
        try:
            return cls(
                method=doc["method"],
                dev_paths=list(doc["dev_paths"]),
                test_paths=list(doc["test_paths"]),
                truth_paths=list(doc["truth_paths"]),
                out_dir=doc["out_dir"],
                k=int(doc.get("k", 10)),
                seed=int(doc.get("seed", 0)),
                overrides=dict(doc.get("overrides", {})),
                trace=bool(doc.get("trace", False)),
            )
        except KeyError as exc:
            raise UsageError(f"manifest is missing field {exc.args[0]!r}") from None


@dataclass
class RunResult:
    manifest: RunManifest
    report: OptimizerReport
    eval_report: EvalReport
    norm_params: object
    inducer_names: list[str]
    wall_time: float


def expand_inducer_paths(entries: list[str]) -> list[Path]:
    """Expand directories to their .csv members; truth files are skipped."""
    paths: list[Path] = []
    for entry in entries:
        p = Path(entry)
        if p.is_dir():
            found = sorted(q for q in p.glob("*.csv") if q.name != GROUND_TRUTH_BASENAME)
            if not found:
                raise IngestionError(f"no inducer csv files in directory {p}")
            paths.extend(found)
        elif p.exists():
            paths.append(p)
        else:
            raise IngestionError(f"input path does not exist: {p}")
    return paths


def load_split(entries: list[str]) -> list[InducerTable]:
    tables = [read_inducer_csv(p) for p in expand_inducer_paths(entries)]
    seen: set[str] = set()
    for t in tables:
        if t.inducer_name in seen:
            raise IngestionError(f"duplicate inducer name {t.inducer_name!r} in split")
        seen.add(t.inducer_name)
    return sorted(tables, key=lambda t: t.inducer_name)


def split_overrides(method: str, overrides: dict) -> tuple[dict, dict]:
    """Partition overrides into OptimizerConfig fields and method parameters."""
    config_kwargs: dict = {}
    method_params: dict = {}
    valid = METHOD_PARAM_KEYS[method]
    for key, value in overrides.items():
        if key in CONFIG_KEYS:
            config_kwargs[key] = value
        elif key in valid:
            method_params[key] = value
        else:
            allowed = sorted(set(CONFIG_KEYS) | valid)
            raise UsageError(
                f"parameter {key!r} is not valid for method {method!r}; allowed: {allowed}"
            )
    return config_kwargs, method_params


def execute(manifest: RunManifest) -> RunResult:
    """Run the full pipeline in memory; writes nothing."""
    dev_tables = load_split(manifest.dev_paths)
    test_tables = load_split(manifest.test_paths)
    dev_names = [t.inducer_name for t in dev_tables]
    test_names = [t.inducer_name for t in test_tables]
    if dev_names != test_names:
        raise IngestionError(
            f"dev and test inducer sets differ: dev={dev_names} test={test_names}"
        )

    truth = load_ground_truth(manifest.truth_paths)
    dev = assemble(dev_tables, truth)
    test = assemble(test_tables, truth)
    params = fit_minmax(dev)
    dev_norm = apply_minmax(params, dev)
    test_norm = apply_minmax(params, test)

    config_kwargs, method_params = split_overrides(manifest.method, manifest.overrides)
    config = OptimizerConfig(
        dimension=dev_norm.n_inducers,
        seed=manifest.seed,
        method_params=method_params,
        **config_kwargs,
    )
    objective = make_mse_objective(dev_norm)
    started = time.perf_counter()
    report = optimize(manifest.method, objective, config)
    wall_time = time.perf_counter() - started

    fused_test = fuse(report.best_weights, test_norm)
    eval_report = map_at_k(fused_test, test_norm, manifest.k)
    return RunResult(manifest, report, eval_report, params, list(dev_norm.inducer_names), wall_time)


def _atomic(write_fn, final: Path, created: list[Path]) -> None:
    tmp = final.with_name(final.name + ".tmp")
    try:
        write_fn(tmp)
        os.replace(tmp, final)
        created.append(final)
    finally:
        tmp.unlink(missing_ok=True)


def write_run_artifacts(result: RunResult) -> Path:
    """Persist one run's artifact set; on failure remove everything written."""
    out = Path(result.manifest.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    created: list[Path] = []
    manifest_text = json.dumps(result.manifest.to_dict(), indent=2) + "\n"
    try:
        _atomic(lambda p: p.write_text(manifest_text, encoding="utf-8"), out / "manifest.json", created)
        _atomic(lambda p: save_normalization(result.norm_params, p), out / "norm_params.json", created)
        _atomic(
            lambda p: save_weights(p, result.inducer_names, result.report.best_weights),
            out / "weights.json",
            created,
        )
        _atomic(lambda p: result.report.save_json(p), out / "optimizer_report.json", created)
        _atomic(lambda p: result.eval_report.save_json(p), out / "eval_report.json", created)
        _atomic(lambda p: result.eval_report.save_csv(p), out / "eval_report.csv", created)
        if result.manifest.trace:
            _atomic(lambda p: result.report.save_trace_csv(p), out / "trace.csv", created)
    except BaseException:
        for path in created:
            path.unlink(missing_ok=True)
        raise
    return out


def run(manifest: RunManifest) -> RunResult:
    result = execute(manifest)
    write_run_artifacts(result)
    return result


def compare(manifests: list[RunManifest], out_dir: str | Path) -> list[RunResult]:
    """Execute several methods on one dataset and write a summary table."""
    if not manifests:
        raise UsageError("compare needs at least one manifest")
    first = manifests[0]
    for m in manifests[1:]:
        same = (
            m.dev_paths == first.dev_paths
            and m.test_paths == first.test_paths
            and m.truth_paths == first.truth_paths
            and m.k == first.k
        )
        if not same:
            raise UsageError("compare manifests must share dev, test, truth, and k")

    results = [run(m) for m in manifests]

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    k = first.k
    map_col = f"test_map_at_{k}"
    rows = []
    for r in results:
        rows.append(
            {
                "method": r.manifest.method,
                "dev_mse": r.report.best_objective,
                map_col: r.eval_report.map_at_k,
                "evaluations": r.report.function_evaluations,
                "wall_time": round(r.wall_time, 3),
            }
        )
    csv_lines = [f"method,dev_mse,{map_col},evaluations,wall_time"]
    for row in rows:
        csv_lines.append(
            f"{row['method']},{row['dev_mse']!r},{row[map_col]!r},"
            f"{row['evaluations']},{row['wall_time']}"
        )
    csv_text = "\n".join(csv_lines) + "\n"
    json_text = json.dumps(rows, indent=2) + "\n"
    created: list[Path] = []
    try:
        _atomic(lambda p: p.write_text(csv_text, encoding="utf-8", newline="\n"), out / "summary.csv", created)
        _atomic(lambda p: p.write_text(json_text, encoding="utf-8"), out / "summary.json", created)
    except BaseException:
        for path in created:
            path.unlink(missing_ok=True)
        raise
    return results


def parse_set_values(pairs: list[str]) -> dict:
    """Parse repeated --set key=value flags; values are int or float."""
    overrides: dict = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        key = key.strip()
        if not sep or not key or not raw.strip():
            raise UsageError(f"--set expects key=value, got {pair!r}")
        raw = raw.strip()
        try:
            value: float = int(raw)
        except ValueError:
            try:
                value = float(raw)
            except ValueError:
                raise UsageError(f"--set value for {key!r} must be numeric, got {raw!r}") from None
        overrides[key] = value
    return overrides


def _scoped_overrides(method: str, overrides: dict) -> dict:
    """Resolve `method.key` scoping: keep plain keys plus this method's own."""
    resolved: dict = {}
    for key, value in overrides.items():
        head, sep, rest = key.partition(".")
        if sep and head in METHODS:
            if head == method:
                resolved[rest] = value
        else:
            resolved[key] = value
    return resolved


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latefuse",
        description="Learn late-fusion weights on a dev split and rank a test split.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--dev", nargs="+", metavar="PATH", help="dev inducer csv files or directories")
        p.add_argument("--test", nargs="+", metavar="PATH", help="test inducer csv files or directories")
        p.add_argument("--truth", nargs="+", metavar="PATH", help="ground truth csv file(s), merged")
        p.add_argument("--k", type=int, default=10, help="ranking cutoff (default 10)")
        p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
        p.add_argument("--out", required=True, metavar="DIR", help="output directory")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            dest="set_values",
            help="optimizer override; repeatable (compare also accepts method.key=value)",
        )
        p.add_argument("--trace", action="store_true", help="also write per-iteration trace.csv")

    run_p = sub.add_parser("run", help="run one method end to end")
    run_p.add_argument("--method", choices=sorted(METHODS), help="weight-search method")
    run_p.add_argument("--manifest", metavar="FILE", help="rerun from a manifest echo instead of flags")
    add_data_flags(run_p)

    cmp_p = sub.add_parser("compare", help="run several methods on the same data")
    cmp_p.add_argument(
        "--methods",
        default="all",
        help="comma-separated method list, or 'all' (default)",
    )
    add_data_flags(cmp_p)
    return parser


def _manifest_from_args(args: argparse.Namespace, method: str, out_dir: str) -> RunManifest:
    if not args.dev or not args.test or not args.truth:
        raise UsageError("--dev, --test, and --truth are required")
    overrides = parse_set_values(args.set_values)
    return RunManifest(
        method=method,
        dev_paths=[str(Path(p).resolve()) for p in args.dev],
        test_paths=[str(Path(p).resolve()) for p in args.test],
        truth_paths=[str(Path(p).resolve()) for p in args.truth],
        out_dir=str(Path(out_dir).resolve()),
        k=args.k,
        seed=args.seed,
        overrides=overrides,
        trace=args.trace,
    )


def _cmd_run(args: argparse.Namespace) -> int:
    if args.manifest:
        doc = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        manifest = RunManifest.from_dict(doc)
        if args.out:
            manifest.out_dir = str(Path(args.out).resolve())
    else:
        if not args.method:
            raise UsageError("either --method or --manifest is required")
        manifest = _manifest_from_args(args, args.method, args.out)
    result = run(manifest)
    k = manifest.k
    print(
        f"{manifest.method}: dev_mse={result.report.best_objective!r} "
        f"test_map_at_{k}={result.eval_report.map_at_k!r} -> {manifest.out_dir}"
    )
    return EXIT_OK


def _cmd_compare(args: argparse.Namespace) -> int:
    if args.methods.strip() == "all":
        methods = list(METHODS)
    else:
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if not methods:
        raise UsageError("no methods selected")
    seen: set[str] = set()
    ordered = []
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown method {m!r}; choose one of {sorted(METHODS)}")
        if m not in seen:
            seen.add(m)
            ordered.append(m)

    overrides = parse_set_values(args.set_values)
    for key in overrides:
        head, sep, _ = key.partition(".")
        if sep and head in METHODS and head not in seen:
            raise UsageError(f"--set {key!r} targets a method not selected for this compare")
    out_root = Path(args.out).resolve()
    manifests = []
    for m in ordered:
        scoped = _scoped_overrides(m, overrides)
        base = _manifest_from_args(args, m, str(out_root / m))
        base.overrides = scoped
        split_overrides(m, scoped)  # validate early, before any run starts
        manifests.append(base)

    results = compare(manifests, out_root)
    k = manifests[0].k
    for r in results:
        print(
            f"{r.manifest.method}: dev_mse={r.report.best_objective!r} "
            f"test_map_at_{k}={r.eval_report.map_at_k!r}"
        )
    print(f"summary -> {out_root / 'summary.csv'}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_compare(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonFiniteObjectiveError as exc:
        print(f"optimization aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (IngestionError, UndefinedMetricError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
