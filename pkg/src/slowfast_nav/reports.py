"""Report, sweep and trace writers/readers (CSV, JSON, JSON lines)."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

from .errors import SchemaError
from .runner import AGG_COLUMNS, EpisodeResult, RunConfig, SweepRow, aggregate_rows, compute_metrics

REPORT_SCHEMA_VERSION = 1
TRACE_SCHEMA_VERSION = 1

ROW_COLUMNS = ("episode_id", "scene_id", "success", "oracle_success", "NE", "TL", "SPL",
               "L-Tok", "V-Tok", "U-Tok", "L-Time", "V-Time", "T-Time", "calls", "triggers", "steps", "error")
_INT = {"L-Tok", "V-Tok", "calls", "triggers", "steps"}
_BOOL = {"success", "oracle_success"}
_STR = {"episode_id", "scene_id", "error"}
AGGREGATE_ID = "ALL"


def _stem(path) -> Path:
    path = Path(path)
    return path.with_suffix("") if path.suffix in (".csv", ".json") else path


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def report_document(config: RunConfig, results: Sequence[EpisodeResult]) -> dict:
    rep = compute_metrics(results)
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "config": config.to_dict(),
        "episodes": list(rep.rows),
        "aggregate": {k: rep.aggregate[k] for k in AGG_COLUMNS + ("calls", "triggers", "steps")},
    }


def write_report(path, config: RunConfig, results: Sequence[EpisodeResult]) -> Tuple[Path, Path]:
    """Write ``<stem>.json`` and ``<stem>.csv`` with the same rows."""
    doc = report_document(config, results)
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    json_path, csv_path = stem.with_suffix(".json"), stem.with_suffix(".csv")
    json_path.write_text(_dumps(doc), encoding="utf-8")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROW_COLUMNS)
        for row in doc["episodes"]:
            w.writerow([row[c] for c in ROW_COLUMNS])
        agg = doc["aggregate"]
        w.writerow([AGGREGATE_ID, "", agg["SR"], agg["OSR"]]
                   + [agg[c] for c in ROW_COLUMNS[4:-1]] + [""])
    return json_path, csv_path


def _typed(col: str, raw: str):
    if col in _STR:
        return raw
    if col in _BOOL:
        if raw not in ("True", "False"):
            raise SchemaError(f"column {col}: expected True/False, got {raw!r}")
        return raw == "True"
    if col in _INT:
        return int(raw)
    return float(raw)


def read_report_csv(path) -> Tuple[List[dict], Dict[str, float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != ROW_COLUMNS:
            raise SchemaError(f"{path}: unexpected header {header}")
        rows, agg = [], None
        for line in reader:
            if line[0] == AGGREGATE_ID:
                vals = dict(zip(header, line))
                agg = {"SR": float(vals["success"]), "OSR": float(vals["oracle_success"])}
                agg.update({c: float(vals[c]) for c in ROW_COLUMNS[4:-1]})
            else:
                rows.append({c: _typed(c, v) for c, v in zip(header, line)})
    if agg is None:
        raise SchemaError(f"{path}: no aggregate row")
    return rows, agg


def read_report_json(path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise SchemaError(f"{path}: schema_version {doc.get('schema_version')!r} != {REPORT_SCHEMA_VERSION}")
    return doc


def reaggregate(rows: Sequence[dict]) -> Dict[str, float]:
    return aggregate_rows(rows)


def trace_records(results: Sequence[EpisodeResult]):
    for res in results:
        for s in res.steps:
            yield {"schema_version": TRACE_SCHEMA_VERSION, "episode_id": res.episode_id, "t": s.t,
                   "step": s.to_dict()}


def write_trace(path, results: Sequence[EpisodeResult]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in trace_records(results):
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return path


def read_trace(path) -> List[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            rec = json.loads(line)
            if rec.get("schema_version") != TRACE_SCHEMA_VERSION:
                raise SchemaError(f"{path}:{lineno}: trace schema_version mismatch")
            out.append(rec)
    return out


SWEEP_COLUMNS = ("tau", "SR", "OSR", "SPL", "NE", "TL", "L-Tok", "V-Tok", "U-Tok",
                 "L-Time", "V-Time", "T-Time", "calls", "triggers", "steps")


def sweep_document(config: RunConfig, rows: Sequence[SweepRow]) -> dict:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "config": config.to_dict(),
        "rows": [{"tau": r.tau, **{c: r.report[c] for c in SWEEP_COLUMNS[1:]}} for r in rows],
    }


def write_sweep(path, config: RunConfig, rows: Sequence[SweepRow]) -> Tuple[Path, Path]:
    doc = sweep_document(config, rows)
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    json_path, csv_path = stem.with_suffix(".json"), stem.with_suffix(".csv")
    json_path.write_text(_dumps(doc), encoding="utf-8")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in doc["rows"]:
            w.writerow([row[c] for c in SWEEP_COLUMNS])
    return json_path, csv_path
