"""CSV ingestion and deterministic serialization of representations."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .core import (
    Bundle,
    ColumnKind,
    Interval,
    Kind,
    ModelRep,
    SummaryRep,
    Table,
    as_representation,
    fmt_num,
)

log = logging.getLogger(__name__)


class CsvError(ValueError):
    pass


def read_csv_text(text: str, hints: Mapping[str, Any] | None = None, source_id: str = "",
                  origin: str = "<csv>") -> Table:
    """Parse CSV text with a header row; empty cells are missing values.

    ``hints`` maps column names to kinds (``"continuous"``, ``"ordinal"``,
    ``"nominal"``) and override inference.
    """
    if text.startswith("﻿"):
        text = text[1:]
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise CsvError(f"{origin}: empty file") from None
    if not header or all(h == "" for h in header):
        raise CsvError(f"{origin}: line 1: empty header")
    rows = []
    for row in reader:
        if not row:
            continue
        if len(row) != len(header):
            raise CsvError(f"{origin}: line {reader.line_num}: expected {len(header)} fields, got {len(row)}")
        rows.append(row)
    kinds = {name: ColumnKind(k) for name, k in (hints or {}).items()}
    unknown = set(kinds) - set(header)
    if unknown:
        raise CsvError(f"{origin}: schema hints name unknown columns {sorted(unknown)}")
    data = {name: [r[i] for r in rows] for i, name in enumerate(header)}
    try:
        table = Table.from_columns(data, kinds, source_id)
    except ValueError as exc:
        raise CsvError(f"{origin}: {exc}") from None
    for c in table.columns:
        raw_present = sum(1 for v in data[c.name] if v != "")
        lost = raw_present - len(c.present())
        if lost:
            log.warning("%s: column %r: %d cells were not numbers and are treated as missing", origin, c.name, lost)
    log.info("%s: %d rows, %d columns", origin, table.n_rows, len(table.columns))
    return table


def load_csv(path, hints: Mapping[str, Any] | None = None, source_id: str | None = None) -> Table:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return read_csv_text(text, hints, source_id if source_id is not None else path.stem, str(path))


def _cell(v) -> str:
    if v is None:
        return ""
    return fmt_num(v)


def _csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def table_csv(t: Table) -> str:
    return _csv([t.names] + [[_cell(v) for v in row] for row in t.rows])


def summary_rows(s: SummaryRep) -> list[list]:
    """Header plus one row per group; interval keys split into ``_lo`` / ``_hi`` columns."""
    interval_keys = [all(isinstance(g.key[i], Interval) for g in s.groups) and bool(s.groups)
                     for i in range(len(s.keys))]
    header = []
    for k, is_iv in zip(s.keys, interval_keys):
        header += [f"{k}_lo", f"{k}_hi"] if is_iv else [k]
    header += list(s.stat_names)
    rows = [header]
    for g in s.groups:
        row = []
        for v, is_iv in zip(g.key, interval_keys):
            row += [v.lo, v.hi] if is_iv else [v]
        rows.append(row + list(g.stats))
    return rows


def summary_csv(s: SummaryRep) -> str:
    rows = summary_rows(s)
    return _csv([rows[0]] + [[_cell(v) for v in r] for r in rows[1:]])


def _jsonable(v):
    if isinstance(v, float) or isinstance(v, np.floating):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, Mapping):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (frozenset, set)):
        return sorted(_jsonable(x) for x in v)
    if isinstance(v, Interval):
        return {"lo": v.lo, "hi": v.hi, "closed_hi": v.closed_hi}
    return v


def dumps_json(obj) -> str:
    """Stable JSON: sorted keys, shortest round-trip floats, non-finite as null."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False, ensure_ascii=False) + "\n"


def model_dict(m: ModelRep) -> dict:
    return {
        "evaluator": m.evaluator.value,
        "target": m.target,
        "axes": [{"name": a.name, "lo": a.lo, "hi": a.hi, "n": a.n} for a in m.axes],
        "params": dict(zip(m.param_names, m.params)),
        "grid": m.grid_array().reshape(-1).tolist(),
    }


def lineage_list(rep) -> list[dict]:
    return [{"op": s.op, "node": s.node, "detail": dict(s.detail)} for s in rep.lineage]


def serialize(rep) -> tuple[str, str]:
    """``(extension, text)`` for an output: CSV for samples and summaries, JSON otherwise."""
    if isinstance(rep, Bundle):
        members = []
        for m in rep.members:
            ext, text = serialize(m)
            members.append({"kind": m.kind.value, "format": ext, "content": text if ext == "csv" else json.loads(text)})
        return "json", dumps_json({"kind": "bundle", "members": members})
    rep = as_representation(rep)
    if rep.kind is Kind.SAMPLE:
        return "csv", table_csv(rep.table)
    if rep.kind is Kind.SUMMARY:
        return "csv", summary_csv(rep.payload)
    return "json", dumps_json({**model_dict(rep.payload), "lineage": lineage_list(rep)})


def rows_to_csv(header, rows) -> str:
    return _csv([list(header)] + [[_cell(v) for v in r] for r in rows])


__all__ = ["CsvError", "load_csv", "read_csv_text", "table_csv", "summary_csv", "summary_rows",
           "dumps_json", "model_dict", "serialize", "rows_to_csv"]
