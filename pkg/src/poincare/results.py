"""Result rows and their CSV files.

A result file is a ``#``-prefixed header block (``# key: value`` lines) followed by a CSV
table with the columns of :class:`ResultRow`. Floats are written with ``repr`` so that
reading a file back is lossless. The ``timestamp`` header line is the only part that
changes between reruns of the same config.
"""

import csv
import io
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Dict, List, Optional

import numpy as np

from .errors import InputError

COLUMNS = ("experiment", "method", "n", "params", "estimate", "rep", "wall_time", "status", "note")


@dataclass
class ResultRow:
    experiment: str
    method: str
    n: int
    params: Dict[str, object]
    estimate: float
    rep: int = 0
    wall_time: Optional[float] = None
    status: str = "ok"
    note: str = ""


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _parse_value(s):
    for cast in (int, float):
        try:
            return cast(s)
        except ValueError:
            pass
    return s


def format_params(params) -> str:
    for k, v in params.items():
        if any(c in str(k) + _fmt(v) for c in ";="):
            raise InputError(f"parameter {k}={v} contains a reserved character")
    return ";".join(f"{k}={_fmt(v)}" for k, v in params.items())


def parse_params(s) -> Dict[str, object]:
    if not s:
        return {}
    return {k: _parse_value(v) for k, v in (item.split("=", 1) for item in s.split(";"))}


def write_results(rows: List[ResultRow], header: Dict[str, object], fh, timestamp=None):
    stamp = timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds")
    for key, value in header.items():
        fh.write(f"# {key}: {value}\n")
    fh.write(f"# timestamp: {stamp}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in rows:
        writer.writerow([
            r.experiment, r.method, r.n, format_params(r.params), _fmt(float(r.estimate)), r.rep,
            "" if r.wall_time is None else _fmt(float(r.wall_time)), r.status, r.note,
        ])


def dumps(rows, header, timestamp=None) -> str:
    buf = io.StringIO()
    write_results(rows, header, buf, timestamp)
    return buf.getvalue()


def read_results(path_or_text):
    """Parse a result file (a path, or the text itself) into ``(header, rows)``."""
    if isinstance(path_or_text, str) and "\n" in path_or_text:
        text = path_or_text
    else:
        with open(path_or_text) as fh:
            text = fh.read()
    lines = text.splitlines()
    header = {}
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        key, _, value = lines[i][1:].strip().partition(":")
        header[key.strip()] = value.strip()
        i += 1
    reader = csv.reader(lines[i:])
    cols = next(reader)
    if tuple(cols) != COLUMNS:
        raise InputError(f"unexpected columns {cols}")
    rows = []
    for rec in reader:
        d = dict(zip(cols, rec))
        rows.append(ResultRow(
            experiment=d["experiment"], method=d["method"], n=int(d["n"]), params=parse_params(d["params"]),
            estimate=float(d["estimate"]), rep=int(d["rep"]),
            wall_time=float(d["wall_time"]) if d["wall_time"] else None, status=d["status"], note=d["note"],
        ))
    return header, rows

