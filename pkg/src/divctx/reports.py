"""CSV and line-delimited JSON report writers.

Columns follow the field order of the report dataclasses:

* H1: ``total_sessions, detected_sessions, session_rate, total_changes,
  non_session_changes, detectable_sessions, detectable_rate``
* sweep: ``sparsity, session_rate, total_changes, seed, detected_sessions,
  total_sessions, detectable_rate``
* type split: ``x, y, runs, session_rate_avg, session_rate_sd, contexts_avg,
  contexts_sd, num_types, changes_avg``
* ground truth: ``recall, precision, precision_defined, hits, boundaries,
  matched_changes, total_changes, window``

Files are written to a temporary sibling and renamed into place.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import tempfile
from typing import Iterable, Mapping, Sequence

from .diversity import StreamResult
from .catalog import Consultation

TRACE_FIELDS = ("user", "index", "ts", "item", "rd", "s", "change")


def atomic_write(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _as_dict(row) -> dict:
    if dataclasses.is_dataclass(row):
        return dataclasses.asdict(row)
    if hasattr(row, "_asdict"):
        return dict(row._asdict())
    return dict(row)


def to_csv(rows: Iterable, columns: Sequence[str] | None = None) -> str:
    rows = [_as_dict(r) for r in rows]
    if columns is None:
        columns = list(rows[0]) if rows else []
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _jsonable(value):
    if isinstance(value, float) and math.isnan(value):
        return "NaN"
    return value


def to_jsonl(rows: Iterable) -> str:
    return "".join(json.dumps({k: _jsonable(v) for k, v in _as_dict(r).items()}) + "\n" for r in rows)


def columns_of(report_type) -> list[str]:
    return [f.name for f in dataclasses.fields(report_type)]


def trace_records(streams: Mapping[str, Sequence[Consultation]],
                  results: Mapping[str, StreamResult]) -> list[dict]:
    records = []
    for user, stream in streams.items():
        res = results[user]
        changed = {c.index for c in res.changes}
        for c, p in zip(stream, res.points):
            records.append({
                "user": user, "index": p.index, "ts": c.timestamp, "item": c.item_id,
                "rd": _jsonable(p.rd), "s": p.s, "change": p.index in changed,
            })
    return records
