"""Reading sequence files (CSV or JSON lines) into prefixes."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import EmptyFile, Malformed, NonContiguousIndex
from .summability import SequencePrefix, as_prefix


def _number(text, lineno) -> float:
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise Malformed(f"not a number: {text!r}", index=lineno) from None
    if not np.isfinite(v):
        raise Malformed(f"non-finite value {text!r}", index=lineno)
    return v


def _index(text, lineno) -> int:
    v = _number(text, lineno)
    if not v.is_integer():
        raise Malformed(f"index must be an integer, got {text!r}", index=lineno)
    return int(v)


def _rows_csv(path: Path, header: bool):
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if header and lineno == 1:
                continue
            cells = [c.strip() for c in row]
            if not any(cells):
                continue
            yield lineno, [c for c in cells if c != ""]


def _rows_jsonl(path: Path):
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                raise Malformed("invalid JSON", index=lineno) from None
            if isinstance(obj, dict):
                if "value" not in obj:
                    raise Malformed("object without 'value'", index=lineno)
                yield lineno, ([obj["index"], obj["value"]] if "index" in obj else [obj["value"]])
            elif isinstance(obj, list):
                yield lineno, obj
            else:
                yield lineno, [obj]


def parse_sequence_file(path, format: str = "csv", header: bool = False) -> SequencePrefix:
    """Load a prefix in file order.

    Rows hold either one value, or ``index,value`` with indices running
    1..N without gaps; the first row fixes which layout the file uses.
    """
    path = Path(path)
    if format == "csv":
        rows = _rows_csv(path, header)
    elif format == "jsonl":
        rows = _rows_jsonl(path)
    else:
        raise ValueError(f"unknown format {format!r}; use csv or jsonl")
    values: list[float] = []
    width = None
    for lineno, cells in rows:
        if width is None:
            width = len(cells)
            if width not in (1, 2):
                raise Malformed("expected 'value' or 'index,value'", index=lineno)
        if len(cells) != width:
            raise Malformed(f"expected {width} column(s), got {len(cells)}", index=lineno)
        if width == 2:
            if _index(cells[0], lineno) != len(values) + 1:
                raise NonContiguousIndex(f"expected index {len(values) + 1}", index=lineno)
            values.append(_number(cells[1], lineno))
        else:
            values.append(_number(cells[0], lineno))
    if not values:
        raise EmptyFile(f"{path} holds no values")
    return SequencePrefix(np.array(values))


def parse_pairs_file(path) -> list[tuple[float, float]]:
    """Two-column CSV of ``xi,eta`` rows."""
    out = []
    for lineno, cells in _rows_csv(Path(path), header=False):
        if len(cells) != 2:
            raise Malformed("expected xi,eta", index=lineno)
        out.append((_number(cells[0], lineno), _number(cells[1], lineno)))
    if not out:
        raise EmptyFile(f"{path} holds no pairs")
    return out


def write_sequence_csv(prefix, path) -> None:
    with open(path, "w") as fh:
        for v in as_prefix(prefix).values.tolist():
            fh.write(f"{v!r}\n")
