"""CSV ingestion, the binary compressed-file format and JSON reports.

Compressed file layout (all little-endian)::

    magic      6 bytes  b"CAMEO1"
    version    u16      1
    n          u64      original length
    n_kept     u64
    stat       u8       0 = ACF, 1 = PACF
    metric     u8       0 MAE, 1 RMSE, 2 NRMSE, 3 mSMAPE, 4 MAPE, 5 CHEB
    lags       u32
    window     u32
    epsilon    f64
    payload    n_kept x (index u64, value f64), indices 1-based

The aggregation function is not stored: a window of 1 reads back as
``none`` and any larger window as ``mean``.
"""
from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import asdict
from pathlib import Path
from typing import Union

import numpy as np

from .core import (
    AggKind,
    CompressedSeries,
    CompressionReport,
    FormatError,
    QualityMeasure,
    StatKind,
    TimeSeries,
)

MAGIC = b"CAMEO1"
VERSION = 1
HEADER = struct.Struct("<6sHQQBBIId")
RECORD = np.dtype([("index", "<u8"), ("value", "<f8")])

_STAT_CODES = {StatKind.ACF: 0, StatKind.PACF: 1}
_METRIC_CODES = {q: q.code for q in QualityMeasure}

PathLike = Union[str, Path]


class CsvError(ValueError):
    pass


def _parse_float(text: str):
    try:
        return float(text)
    except ValueError:
        return None


def load_csv(path: PathLike, column: Union[int, str] = 0) -> TimeSeries:
    """Read one column of a CSV file as a time series.

    A first row whose selected field does not parse as a number is taken as
    a header (and lets ``column`` be given by name).
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CsvError(f"{path}: empty file")
    start = 0
    col = column
    first = rows[0]
    if isinstance(column, str) and not column.lstrip("-").isdigit():
        if column not in first:
            raise CsvError(f"{path}: no column named {column!r} in header")
        col = first.index(column)
        start = 1
    else:
        col = int(column)
        if col < len(first) and _parse_float(first[col].strip()) is None:
            start = 1
    values = []
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if not row or all(not f.strip() for f in row):
            continue
        if col >= len(row) or not row[col].strip():
            raise CsvError(f"{path}:{lineno}: missing value in column {col + 1}")
        v = _parse_float(row[col].strip())
        if v is None:
            raise CsvError(f"{path}:{lineno}: cannot parse {row[col]!r} in column {col + 1}")
        if not math.isfinite(v):
            raise CsvError(f"{path}:{lineno}: non-finite value {row[col]!r} in column {col + 1}")
        values.append(v)
    if len(values) < 2:
        raise CsvError(f"{path}: fewer than two values")
    return TimeSeries(np.array(values))


def write_csv(path_or_file, values, header: str | None = None) -> None:
    lines = [] if header is None else [header]
    lines.extend(repr(float(v)) for v in values)
    _emit(path_or_file, "\n".join(lines) + "\n")


def bits_per_value(cs: CompressedSeries) -> float:
    """64 bits per kept value over the original length (header excluded)."""
    return 64.0 * cs.n_kept / cs.n


def dumps_compressed(cs: CompressedSeries) -> bytes:
    header = HEADER.pack(
        MAGIC,
        VERSION,
        cs.n,
        cs.n_kept,
        _STAT_CODES[cs.stat],
        _METRIC_CODES[cs.metric],
        cs.lags,
        cs.window,
        float(cs.epsilon),
    )
    payload = np.empty(cs.n_kept, dtype=RECORD)
    payload["index"] = cs.indices + 1
    payload["value"] = cs.values
    return header + payload.tobytes()


def loads_compressed(blob: bytes) -> CompressedSeries:
    if len(blob) < HEADER.size:
        raise FormatError("truncated header")
    magic, version, n, n_kept, stat, metric, lags, window, eps = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if len(blob) != HEADER.size + n_kept * RECORD.itemsize:
        raise FormatError("payload length does not match n_kept")
    try:
        stat_kind = {v: k for k, v in _STAT_CODES.items()}[stat]
        metric_kind = {v: k for k, v in _METRIC_CODES.items()}[metric]
    except KeyError:
        raise FormatError("unknown stat or metric code") from None
    payload = np.frombuffer(blob, dtype=RECORD, offset=HEADER.size)
    idx = payload["index"].astype(np.int64)
    if np.any(idx < 1) or np.any(idx > n):
        raise FormatError("kept index out of range")
    return CompressedSeries(
        indices=idx - 1,
        values=payload["value"].copy(),
        n=int(n),
        stat=stat_kind,
        lags=int(lags),
        window=int(window),
        agg=AggKind.NONE if window == 1 else AggKind.MEAN,
        epsilon=float(eps),
        metric=metric_kind,
    )


def write_compressed(path: PathLike, cs: CompressedSeries) -> None:
    Path(path).write_bytes(dumps_compressed(cs))


def read_compressed(path: PathLike) -> CompressedSeries:
    return loads_compressed(Path(path).read_bytes())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def report_dict(report: CompressionReport) -> dict:
    d = asdict(report)
    d["passed"] = report.passed
    return _jsonable(d)


def write_report(report, path: PathLike | None = None) -> str:
    """Serialise a report (or a list of them) to JSON with a fixed key order."""
    if isinstance(report, CompressionReport):
        doc = report_dict(report)
    elif isinstance(report, list):
        doc = [report_dict(r) if isinstance(r, CompressionReport) else _jsonable(r) for r in report]
    else:
        doc = _jsonable(report)
    text = json.dumps(doc, indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def read_report(path_or_text) -> dict:
    text = path_or_text
    if isinstance(path_or_text, Path) or (isinstance(path_or_text, str) and not path_or_text.lstrip().startswith(("{", "["))):
        text = Path(path_or_text).read_text()
    return json.loads(text)


def write_segments(path_or_file, seg) -> None:
    """PMC/SWING model as CSV: 1-based start index, start value, slope."""
    slopes = seg.slopes if seg.slopes is not None else np.zeros(seg.n_segments)
    lines = [f"# n={seg.n} kind={seg.kind}", "start,value,slope"]
    lines += [f"{int(s) + 1},{float(v)!r},{float(k)!r}" for s, v, k in zip(seg.starts, seg.values, slopes)]
    _emit(path_or_file, "\n".join(lines) + "\n")


def write_coefficients(path_or_file, model) -> None:
    """Kept real-FFT bins as CSV: bin, real part, imaginary part."""
    lines = [f"# n={model.n}", "bin,real,imag"]
    lines += [f"{int(b)},{float(c.real)!r},{float(c.imag)!r}" for b, c in zip(model.bins, model.coefs)]
    _emit(path_or_file, "\n".join(lines) + "\n")


def _emit(path_or_file, text: str) -> None:
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        Path(path_or_file).write_text(text)
