"""Command-line front end.

Subcommands::

    sava simulate        synthetic worlds, several methods on shared seeds
    sava counterexample  the two fixed-p-value worlds that break naive rules
    sava sweep-k         final-time FSR/TSR over a grid of windows k and arrival rates p
    sava ingest-run      replay a rating-event file
    sava report          merge metric tables, extract level traces

Outputs go to ``--out`` (default: ``$SAVA_OUTPUT_DIR`` or ``./sava-out``).
Exit status is 0 on success, 1 for usage errors and 2 for runtime failures.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, tables
from .experiments import (
    BASELINE_METHODS,
    METHODS,
    MethodParams,
    SimJob,
    run_method,
    run_replications,
)
from .ingest import RecordError, build_streams, filter_items, parse_records
from .metrics import aggregate, final_summary
from .simgen import Gauss, TruncGauss

OUTPUT_ENV = "SAVA_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass
class RunSpec:
    subcommand: str
    methods: list
    reps: int
    seed: int
    out: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.reps < 1:
            raise UsageError(f"--reps must be >= 1, got {self.reps}")
        if not self.methods:
            raise UsageError("at least one method is required")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise UsageError(f"unknown methods {bad}; choose from {', '.join(METHODS)}")


def _methods(text: str) -> list[str]:
    return [m.strip() for m in text.split(",") if m.strip()]


def _floats(text: str) -> list[float]:
    try:
        return [float(eval_fraction(x)) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def eval_fraction(text: str) -> float:
    """Parse ``0.25`` or ``1/3``."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _prob(text: str) -> float:
    try:
        return eval_fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(f"invalid probability {text!r}") from None


def _add_common(p: argparse.ArgumentParser, reps: int = 50, alpha: float = 0.05, k: int = 25):
    p.add_argument("--alpha", type=float, default=alpha, help="target FSR level")
    p.add_argument("--k", type=int, default=k, help="investing window")
    p.add_argument("--reps", type=int, default=reps, help="Monte Carlo replications")
    p.add_argument("--seed", type=int, default=0, help="root seed")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--max-index", type=int, default=800,
                   help="report decision-time indices 1..N (default %(default)s)")
    p.add_argument("--out", default=None, help=f"output directory (default ${OUTPUT_ENV} or ./sava-out)")


def _add_world(p: argparse.ArgumentParser):
    p.add_argument("--model", choices=("truncgauss", "gauss"), default="truncgauss")
    p.add_argument("--mu", type=float, default=1.0, help="effect size |mu|")
    p.add_argument("--K", type=float, default=2.0, help="truncation bound")
    p.add_argument("--pi-plus", type=float, default=0.5, help="share of tasks where A is better")
    p.add_argument("--T", type=int, default=300, help="horizon")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sava", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run methods on synthetic worlds")
    _add_world(p)
    p.add_argument("--p", type=_prob, default=1 / 3, help="arrival probability")
    p.add_argument("--methods", default="sava,lordpp,saffron,addis")
    p.add_argument("--alpha-a", type=float, default=None, help="arm-A level for sava-armspec")
    p.add_argument("--alpha-b", type=float, default=None, help="arm-B level for sava-armspec")
    _add_common(p)

    p = sub.add_parser("counterexample", help="fixed-p-value worlds that defeat naive rules")
    p.add_argument("--which", type=int, choices=(1, 2), required=True)
    p.add_argument("--methods", default=None,
                   help="default: method1 (world 1) or method2 (world 2), savaspecial, sava")
    p.add_argument("--T", type=int, default=100)
    _add_common(p, alpha=0.1, k=10)

    p = sub.add_parser("sweep-k", help="final-time FSR/TSR over windows k and arrival rates p")
    _add_world(p)
    p.set_defaults(model="gauss", mu=0.1)
    p.add_argument("--k-list", type=_ints, default=[2, 10, 25, 100])
    p.add_argument("--p-list", type=_floats, default=[1 / 20, 1 / 3, 2 / 3])
    p.add_argument("--methods", default="sava")
    _add_common(p)

    p = sub.add_parser("ingest-run", help="replay a rating-event file")
    p.add_argument("input", help="delimited file: item_id, user_id, rating, timestamp")
    p.add_argument("--min-reviews", type=int, default=50,
                   help="keep items with more than this many reviews")
    p.add_argument("--skip-bad-rows", action="store_true", help="skip malformed rows instead of failing")
    p.add_argument("--methods", default="sava,lordpp,saffron,addis")
    p.add_argument("--trace-tasks", type=_ints, default=[100, 200, 300, 400],
                   help="tasks whose level traces to export")
    _add_common(p, reps=1, alpha=0.2, k=100)

    p = sub.add_parser("report", help="merge metric tables and extract level traces")
    p.add_argument("inputs", nargs="*", help="metric tables to merge")
    p.add_argument("--traces", default=None, help="level-trace file to extract from")
    p.add_argument("--tasks", type=_ints, default=None, help="task ids for the trace extract")
    p.add_argument("--out", default=None)
    return parser


def _out_dir(arg: Optional[str]) -> Path:
    path = Path(arg or os.environ.get(OUTPUT_ENV) or "sava-out")
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise UsageError(f"cannot create output directory {path}: {e}") from None
    if not os.access(path, os.W_OK):
        raise UsageError(f"output directory {path} is not writable")
    return path


def _model(args):
    if args.model == "truncgauss":
        return TruncGauss(args.mu, args.K)
    return Gauss(args.mu)


def _summarize(reps, max_index):
    summary = aggregate(reps, max_index=max_index)
    L = len(summary)
    sel = np.array([r.n_selected[:L] for r in reps], dtype=np.float64)
    se = sel.std(axis=0, ddof=1) / math.sqrt(len(reps)) if len(reps) > 1 else np.zeros(L)
    summary.extra["n_selected"] = (sel.mean(axis=0), se)
    return summary


def _manifest(spec: RunSpec, files: list[str], extra: Optional[dict] = None) -> dict:
    doc = {"schema": f"sava-manifest v{tables.SCHEMA_VERSION}", "version": __version__,
           "spec": asdict(spec), "seed": spec.seed, "files": sorted(files)}
    if extra:
        doc.update(extra)
    return doc


def _write_series(out: Path, spec: RunSpec, results, max_index) -> list[str]:
    files = []
    for m in spec.methods:
        summary = _summarize(results[m], max_index)
        name = f"metrics_{m}.csv"
        tables.write_metrics(out / name, tables.summary_rows(m, summary))
        files.append(name)
    return files


def cmd_simulate(args) -> int:
    out = _out_dir(args.out)
    model = _model(args)
    spec = RunSpec("simulate", _methods(args.methods), args.reps, args.seed, str(out),
                   {"model": args.model, "mu": args.mu, "K": args.K, "pi_plus": args.pi_plus,
                    "T": args.T, "p": args.p, "alpha": args.alpha, "k": args.k,
                    "alpha_a": args.alpha_a, "alpha_b": args.alpha_b,
                    "max_index": args.max_index})
    params = MethodParams(args.alpha, args.k, args.alpha_a, args.alpha_b)
    job = SimJob("sim", tuple(spec.methods), params, args.seed, args.T, args.p, args.pi_plus, model)
    results = run_replications(job, args.reps, args.threads)
    files = _write_series(out, spec, results, args.max_index)
    finals = {m: final_summary(results[m]) for m in spec.methods}
    tables.write_manifest(out / "manifest.json", _manifest(spec, files, {"final": finals}))
    for m in spec.methods:
        f = finals[m]
        print(f"{m:15s} FSR_T={f['fsr']:.4f} (se {f['fsr_se']:.4f})  TSR_T={f['tsr']:.4f} (se {f['tsr_se']:.4f})")
    return EXIT_OK


def cmd_counterexample(args) -> int:
    out = _out_dir(args.out)
    default = f"method{args.which},savaspecial,sava"
    methods = _methods(args.methods or default)
    spec = RunSpec("counterexample", methods, args.reps, args.seed, str(out),
                   {"which": args.which, "T": args.T, "alpha": args.alpha, "k": args.k,
                    "max_index": args.max_index})
    bad = [m for m in methods if m in BASELINE_METHODS]
    if bad:
        raise UsageError(f"{bad} need sample data; counterexample worlds carry fixed p-values")
    job = SimJob(f"ce{args.which}", tuple(methods), MethodParams(args.alpha, args.k),
                 args.seed, args.T)
    results = run_replications(job, args.reps, args.threads)
    files = _write_series(out, spec, results, args.max_index)
    peaks = {}
    for m in methods:
        s = _summarize(results[m], args.max_index)
        i = int(np.argmax(s.fsr))
        peaks[m] = {"max_fsr": float(s.fsr[i]), "se": float(s.fsr_se[i]), "index": i + 1,
                    "max_mfsr": float(s.mfsr.max())}
        print(f"{m:15s} max FSR={s.fsr[i]:.4f} (se {s.fsr_se[i]:.4f}) at index {i + 1}; "
              f"max mFSR={s.mfsr.max():.4f}  target {args.alpha}")
    tables.write_manifest(out / "manifest.json", _manifest(spec, files, {"peaks": peaks}))
    return EXIT_OK


def cmd_sweep_k(args) -> int:
    out = _out_dir(args.out)
    model = _model(args)
    methods = _methods(args.methods)
    spec = RunSpec("sweep-k", methods, args.reps, args.seed, str(out),
                   {"model": args.model, "mu": args.mu, "K": args.K, "pi_plus": args.pi_plus,
                    "T": args.T, "alpha": args.alpha, "k_list": args.k_list,
                    "p_list": args.p_list})
    if any(k < 1 for k in args.k_list):
        raise UsageError("every k must be >= 1")
    if any(not 0 < p <= 1 for p in args.p_list):
        raise UsageError("every p must lie in (0, 1]")
    rows = []
    for p in args.p_list:
        for k in args.k_list:
            job = SimJob("sim", tuple(methods), MethodParams(args.alpha, k), args.seed,
                         args.T, p, args.pi_plus, model)
            results = run_replications(job, args.reps, args.threads)
            for m in methods:
                f = final_summary(results[m])
                rows.append((k, p, m, f["fsr"], f["fsr_se"], f["mfsr"], f["mfsr_se"],
                             f["tsr"], f["tsr_se"], f["n_reps"]))
                print(f"p={p:.4f} k={k:3d} {m:10s} FSR_T={f['fsr']:.4f} (se {f['fsr_se']:.4f}) "
                      f"TSR_T={f['tsr']:.4f}")
    tables.write_sweep(out / "sweep.csv", rows)
    tables.write_manifest(out / "manifest.json", _manifest(spec, ["sweep.csv"]))
    return EXIT_OK


def cmd_ingest_run(args) -> int:
    out = _out_dir(args.out)
    methods = _methods(args.methods)
    spec = RunSpec("ingest-run", methods, 1, args.seed, str(out),
                   {"input": args.input, "min_reviews": args.min_reviews, "alpha": args.alpha,
                    "k": args.k, "skip_bad_rows": args.skip_bad_rows,
                    "trace_tasks": args.trace_tasks, "max_index": args.max_index})
    errors: list = []
    records = parse_records(args.input, strict=not args.skip_bad_rows, errors=errors)
    for e in errors:
        print(f"skipped {e}", file=sys.stderr)
    replay = build_streams(filter_items(records, args.min_reviews))
    params = MethodParams(args.alpha, args.k)
    rows, trace_rows, finals = [], [], {}
    wanted = set(args.trace_tasks)
    for m in methods:
        res = run_method(m, replay, params, record="full")
        rows.extend(tables.series_rows(m, res.metrics, args.max_index))
        for r in res.log:
            if r.task in wanted:
                trace_rows.append((m, r.task, r.index, r.level_a, r.level_b))
        finals[m] = int(res.metrics.n_selected[-1])
        print(f"{m:10s} selections at final time: {finals[m]}")
    tables.write_metrics(out / "metrics.csv", rows)
    tables.write_traces(out / "traces.csv", trace_rows)
    extra = {"n_items": replay.n_tasks, "n_decision_times": len(replay.grid.times),
             "tied_first_reviews": replay.tied_first_reviews, "final_selections": finals,
             "skipped_rows": len(errors)}
    tables.write_manifest(out / "manifest.json",
                          _manifest(spec, ["metrics.csv", "traces.csv"], extra))
    return EXIT_OK


def cmd_report(args) -> int:
    if not args.inputs and not args.traces:
        raise UsageError("report needs metric tables to merge or --traces")
    out = _out_dir(args.out)
    files = []
    if args.inputs:
        merged = []
        for path in args.inputs:
            run_id = Path(path).parent.name + "/" + Path(path).stem
            for r in tables.read_metrics(path):
                merged.append(r._replace(run_id=r.run_id or run_id))
        tables.write_metrics(out / "merged.csv", merged)
        files.append("merged.csv")
        print(f"merged {len(args.inputs)} tables, {len(merged)} rows")
    if args.traces:
        rows = tables.read_traces(args.traces)
        tasks = args.tasks or sorted({r[1] for r in rows})
        header, body = tables.trace_columns(rows, tasks)
        tables.write_wide(out / "trace_extract.csv", "sava-trace-extract", header, body)
        files.append("trace_extract.csv")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "counterexample": cmd_counterexample,
    "sweep-k": cmd_sweep_k,
    "ingest-run": cmd_ingest_run,
    "report": cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "reps", 1) < 1:
            raise UsageError(f"--reps must be >= 1, got {args.reps}")
        if getattr(args, "threads", 1) < 1:
            raise UsageError(f"--threads must be >= 1, got {args.threads}")
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except (RecordError, tables.SchemaError, FileNotFoundError, ValueError) as e:
        print(f"sava: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:  # partial failures fail the whole run
        print(f"sava: runtime failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
