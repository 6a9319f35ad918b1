"""Plain-text outputs: long-format metric tables, sweep summaries, level traces, manifests.

Every table starts with one comment line naming its schema and version,
e.g. ``# sava-metrics v1``, followed by a CSV header. Readers check that line
before parsing. Floats are written with ``repr`` so a write/read round trip
is exact.
"""
from __future__ import annotations

import csv
import json
import math
import os
from typing import Iterable, NamedTuple, Optional

import numpy as np

from .metrics import AggregateSummary, MetricsSeries

SCHEMA_VERSION = 1

METRIC_COLUMNS = ("decision_time_index", "method", "metric", "value", "stderr")
SWEEP_COLUMNS = ("k", "p", "method", "fsr", "fsr_se", "mfsr", "mfsr_se", "tsr", "tsr_se", "n_reps")
TRACE_COLUMNS = ("method", "task", "decision_time_index", "level_a", "level_b")


class SchemaError(ValueError):
    """A file's schema line is missing, unknown or of another version."""


class MetricRow(NamedTuple):
    decision_time_index: int
    method: str
    metric: str
    value: float
    stderr: float
    run_id: Optional[str] = None


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write(path, schema: str, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {schema} v{SCHEMA_VERSION}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _read(path, schema: str):
    with open(path, encoding="utf-8", newline="") as fh:
        first = fh.readline().strip()
        expected = f"# {schema} v{SCHEMA_VERSION}"
        if first != expected:
            raise SchemaError(f"{path}: expected schema line {expected!r}, found {first!r}")
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: missing column header")
        return header, list(reader)


def summary_rows(method: str, summary: AggregateSummary) -> list[MetricRow]:
    rows = []
    extra = summary.extra
    for n, i in enumerate(summary.index):
        i = int(i)
        rows.append(MetricRow(i, method, "fsr", summary.fsr[n], summary.fsr_se[n]))
        rows.append(MetricRow(i, method, "mfsr", summary.mfsr[n], summary.mfsr_se[n]))
        rows.append(MetricRow(i, method, "tsr", summary.tsr[n], summary.tsr_se[n]))
        for name, (val, se) in extra.items():
            rows.append(MetricRow(i, method, name, val[n], se[n]))
    return rows


def write_metrics(path, rows: Iterable[MetricRow]) -> None:
    rows = list(rows)
    with_run = any(r.run_id is not None for r in rows)
    cols = ("run_id",) + METRIC_COLUMNS if with_run else METRIC_COLUMNS
    out = []
    for r in rows:
        base = (r.decision_time_index, r.method, r.metric, r.value, r.stderr)
        out.append((r.run_id,) + base if with_run else base)
    _write(path, "sava-metrics", cols, out)


def read_metrics(path) -> list[MetricRow]:
    header, body = _read(path, "sava-metrics")
    with_run = header[0] == "run_id"
    expected = (("run_id",) if with_run else ()) + METRIC_COLUMNS
    if tuple(header) != expected:
        raise SchemaError(f"{path}: unexpected columns {header}")
    rows = []
    for rec in body:
        run_id = rec[0] if with_run else None
        i, method, metric, value, se = rec[1:] if with_run else rec
        rows.append(MetricRow(int(i), method, metric, float(value), float(se), run_id))
    return rows


def write_sweep(path, rows: Iterable[tuple]) -> None:
    _write(path, "sava-sweep", SWEEP_COLUMNS, rows)


def read_sweep(path) -> list[dict]:
    header, body = _read(path, "sava-sweep")
    if tuple(header) != SWEEP_COLUMNS:
        raise SchemaError(f"{path}: unexpected columns {header}")
    out = []
    for rec in body:
        d = dict(zip(header, rec))
        d["k"] = int(d["k"])
        d["n_reps"] = int(d["n_reps"])
        for key in ("p", "fsr", "fsr_se", "mfsr", "mfsr_se", "tsr", "tsr_se"):
            d[key] = float(d[key])
        out.append(d)
    return out


def write_traces(path, rows: Iterable[tuple]) -> None:
    _write(path, "sava-trace", TRACE_COLUMNS, rows)


def read_traces(path) -> list[tuple]:
    header, body = _read(path, "sava-trace")
    if tuple(header) != TRACE_COLUMNS:
        raise SchemaError(f"{path}: unexpected columns {header}")
    return [(m, int(t), int(i), float(a), float(b)) for m, t, i, a, b in body]


def trace_columns(rows: Iterable[tuple], tasks: Iterable[int]) -> tuple[list[str], list[list]]:
    """Wide extract: one column per task holding ``max(level_a, level_b)``.

    Rows are keyed by ``(method, decision_time_index)``; blank where the task
    was not evaluated.
    """
    tasks = list(tasks)
    table: dict[tuple[str, int], dict[int, float]] = {}
    for m, t, i, a, b in rows:
        if t in tasks:
            table.setdefault((m, i), {})[t] = max(a, b)
    header = ["method", "decision_time_index"] + [f"task_{t}" for t in tasks]
    body = []
    for (m, i) in sorted(table):
        vals = table[(m, i)]
        body.append([m, i] + [vals.get(t, "") for t in tasks])
    return header, body


def write_wide(path, schema: str, header, body) -> None:
    _write(path, schema, header, body)


def series_rows(method: str, series: MetricsSeries, max_index: Optional[int] = None) -> list[MetricRow]:
    """Single-run rows (standard errors are zero)."""
    n = len(series) if max_index is None else min(len(series), max_index)
    rows = []
    for i in range(n):
        rows.append(MetricRow(i + 1, method, "fsr", series.fsp[i], 0.0))
        rows.append(MetricRow(i + 1, method, "tsr", series.tsp[i], 0.0))
        rows.append(MetricRow(i + 1, method, "n_selected", float(series.n_selected[i]), 0.0))
    return rows


def write_manifest(path, manifest: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def read_manifest(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    raise TypeError(f"cannot serialize {type(obj).__name__}")
