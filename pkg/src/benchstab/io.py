"""Reading and writing the package's file formats.

Score matrices are UTF-8 comma-separated files. The header row starts with
``dataset_id`` followed by pipeline names, and every later row holds one
dataset. Comment lines start with ``#``; the pragma ``# direction: lower``
marks losses (default ``higher``).
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .ranking import ScoreMatrix
from .theory import PerformanceModel

__all__ = [
    "load_mapping",
    "load_model",
    "load_score_matrix",
    "load_table",
    "write_score_matrix",
]

_PRAGMA = re.compile(r"^#\s*direction\s*:\s*(\w+)\s*$", re.IGNORECASE)


def _read_text(path) -> str:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"file not found: {p}")
    try:
        return p.read_text(encoding="utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ValidationError(f"{p} is not UTF-8: {exc}") from exc


def _split_comments(text: str) -> tuple[list[str], list[str]]:
    comments, body = [], []
    for line in text.splitlines():
        (comments if line.lstrip().startswith("#") else body).append(line)
    return comments, [line for line in body if line.strip()]


def _parse_float(cell: str, where: str) -> float:
    s = cell.strip()
    if not s:
        raise ValidationError(f"empty cell at {where}")
    try:
        v = float(s)
    except ValueError:
        raise ValidationError(f"cell at {where} is not a number: {s!r}") from None
    if not math.isfinite(v):
        raise ValidationError(f"non-finite cell at {where}: {s!r}")
    return v


def load_score_matrix(path) -> ScoreMatrix:
    """Parse a score-matrix file; errors name the offending row and column."""
    comments, body = _split_comments(_read_text(path))
    higher = True
    for c in comments:
        m = _PRAGMA.match(c.strip())
        if m:
            word = m.group(1).lower()
            if word not in ("higher", "lower"):
                raise ValidationError(f"direction must be 'higher' or 'lower', got {word!r}")
            higher = word == "higher"
    rows = list(csv.reader(body))
    if not rows:
        raise ValidationError(f"{path}: missing header")
    header = [h.strip() for h in rows[0]]
    if header[0] != "dataset_id":
        raise ValidationError(f"{path}: header must start with 'dataset_id', got {header[0]!r}")
    pipelines = header[1:]
    if len(pipelines) < 2:
        raise ValidationError(f"{path}: need at least 2 pipeline columns")
    if any(not p for p in pipelines):
        raise ValidationError(f"{path}: empty pipeline name in header")
    if len(set(pipelines)) != len(pipelines):
        raise ValidationError(f"{path}: duplicate pipeline names")
    ids, grid, seen = [], [], set()
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValidationError(f"{path}: row {r} has {len(row)} fields, expected {len(header)}")
        did = row[0].strip()
        if not did:
            raise ValidationError(f"{path}: empty dataset_id on row {r}")
        if did in seen:
            raise ValidationError(f"{path}: duplicate dataset_id {did!r} on row {r}")
        seen.add(did)
        ids.append(did)
        grid.append([_parse_float(c, f"row {r} ({did}), column {pipelines[j]!r}")
                     for j, c in enumerate(row[1:])])
    if not grid:
        raise ValidationError(f"{path}: no data rows")
    return ScoreMatrix(np.array(grid), tuple(ids), tuple(pipelines), higher)


def write_score_matrix(m: ScoreMatrix, path=None) -> str:
    """Serialize ``m``; floats use ``repr`` so a reload is exact. Returns the text."""
    buf = io.StringIO()
    buf.write(f"# direction: {'higher' if m.higher_is_better else 'lower'}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dataset_id", *m.pipeline_ids])
    for did, row in zip(m.dataset_ids, m.scores):
        w.writerow([did, *(repr(float(v)) for v in row)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def load_model(path) -> PerformanceModel:
    """Read a JSON model file with ``mu``, ``sigma`` and optional ``bias``/``sigma_z``."""
    try:
        d = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(d, dict):
        raise ValidationError(f"{path}: model file must hold a JSON object")
    return PerformanceModel.from_dict(d)


def load_mapping(path, numeric: bool = False) -> dict:
    """Two-column delimited map ``dataset_id -> value``; a header row is optional.

    The first row is treated as a header when its second field is not a
    number (for numeric maps) or when its first field is ``dataset_id``.
    """
    _, body = _split_comments(_read_text(path))
    rows = list(csv.reader(body))
    if rows and rows[0] and rows[0][0].strip() == "dataset_id":
        rows = rows[1:]
    elif rows and numeric and len(rows[0]) == 2:
        try:
            float(rows[0][1])
        except ValueError:
            rows = rows[1:]
    out = {}
    for r, row in enumerate(rows, start=1):
        if len(row) != 2:
            raise ValidationError(f"{path}: row {r} must have 2 fields")
        key, val = row[0].strip(), row[1].strip()
        if key in out:
            raise ValidationError(f"{path}: duplicate key {key!r}")
        out[key] = _parse_float(val, f"row {r}") if numeric else val
    if not out:
        raise ValidationError(f"{path}: empty mapping")
    return out


def load_table(path) -> dict[str, list[str | None]]:
    """Read a CSV data table as ``column -> list of cells``; empty cells become None.

    Unlike the other readers, lines starting with ``#`` are data here.
    """
    rows = [row for row in csv.reader(io.StringIO(_read_text(path))) if row]
    if not rows:
        raise ValidationError(f"{path}: missing header")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise ValidationError(f"{path}: duplicate column names")
    cols: dict[str, list] = {h: [] for h in header}
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValidationError(f"{path}: row {r} has {len(row)} fields, expected {len(header)}")
        for h, c in zip(header, row):
            cols[h].append(c if c.strip() else None)
    return cols
