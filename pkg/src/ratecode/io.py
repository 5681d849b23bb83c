"""Data files and reports.

Matrices are CSV with one sample per row (UTF-8, ',' separator, '.'
decimal point, optional header line) and are transposed on load so that
samples become columns. Floats are written with ``repr``, the shortest
string that round-trips exactly. Reports are JSON objects carrying a
``schema_version`` field.
"""
import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import InvalidInput, ParseError

SCHEMA_VERSION = 1


def _read_rows(path, header):
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except UnicodeDecodeError as exc:
        raise ParseError(f"not UTF-8 text ({exc.reason})", path=path) from None
    start = 1 if header else 0
    body = [(i + 1, r) for i, r in enumerate(rows[start:], start=start) if r and any(c.strip() for c in r)]
    return path, (rows[0] if header and rows else None), body


def load_matrix(path, header=False):
    """Read a CSV of samples (rows) into an ``n x m`` float matrix (columns)."""
    path, _, body = _read_rows(path, header)
    if not body:
        raise ParseError("no data rows", path=path)
    width = len(body[0][1])
    out = np.empty((len(body), width))
    for k, (row, cells) in enumerate(body):
        if len(cells) != width:
            raise ParseError(f"expected {width} fields, found {len(cells)}", row=row, path=path)
        for col, cell in enumerate(cells, start=1):
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(f"not a number: {cell!r}", row=row, column=col, path=path) from None
            if not math.isfinite(value):
                raise ParseError(f"non-finite value {cell!r}", row=row, column=col, path=path)
            out[k, col - 1] = value
    return out.T.copy()


def save_matrix(path, W, header=None):
    """Write an ``n x m`` matrix as ``m`` CSV rows of ``n`` values each."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim == 1:
        W = W[:, None]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header is not None:
            writer.writerow(header)
        for sample in W.T:
            writer.writerow([repr(float(v)) for v in sample])


def load_labels(path, header=False):
    """One integer label per row (first column)."""
    path, _, body = _read_rows(path, header)
    if not body:
        raise ParseError("no labels", path=path)
    labels = []
    for row, cells in body:
        try:
            value = float(cells[0])
        except ValueError:
            raise ParseError(f"not an integer label: {cells[0]!r}", row=row, column=1, path=path) from None
        if value != int(value):
            raise ParseError(f"not an integer label: {cells[0]!r}", row=row, column=1, path=path)
        labels.append(int(value))
    return np.asarray(labels, dtype=np.int64)


def save_labels(path, labels):
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.writelines(f"{int(v)}\n" for v in labels)


def save_curve(path, x, y, names=("x", "y")):
    """Two-column plot data."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for a, b in zip(x, y):
            writer.writerow([repr(float(a)), repr(float(b))])


def to_jsonable(obj):
    """Convert numpy scalars/arrays and tuples into plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            raise InvalidInput(f"cannot serialize non-finite number {value}")
        return value
    if obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, Path):
        return str(obj)
    raise InvalidInput(f"cannot serialize {type(obj).__name__}")


def dumps_report(report):
    return json.dumps(to_jsonable(report), indent=2, allow_nan=False) + "\n"


def write_report(report, path=None):
    text = dumps_report(report)
    if path is None:
        return text
    Path(path).write_text(text, encoding="utf-8")
    return text


def read_report(path):
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("schema_version") != SCHEMA_VERSION:
        raise InvalidInput(f"unsupported report schema {data.get('schema_version')!r}")
    return data


def load_config(path):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, row=exc.lineno, column=exc.colno, path=path) from None
    if not isinstance(data, dict):
        raise InvalidInput("config file must hold a JSON object")
    return data
