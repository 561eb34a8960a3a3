"""JSON report bundles.

The report body is canonical JSON (sorted keys, fixed separators, ``repr``
floats), so identical runs give byte-identical files. Anything that varies
between identical runs, the wall-clock timestamp and thread count included,
goes to a sidecar ``<name>.meta.json`` instead.

Non-finite floats cannot be stored in JSON. They are written as ``null``, and
their location and reason are listed under ``nulls``.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ValidationError

__all__ = ["ReportBundle", "to_jsonable"]

FORMAT_VERSION = 1


def _tool_version() -> str:
    from . import __version__
    return __version__


def to_jsonable(obj: Any, path: str = "", nulls: list | None = None) -> Any:
    """Convert numpy values, tuples and dataclass-like objects to plain JSON types."""
    if nulls is None:
        nulls = []
    if hasattr(obj, "to_dict"):
        obj = obj.to_dict()
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v, f"{path}/{k}", nulls) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v, f"{path}/{i}", nulls) for i, v in enumerate(obj)]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist(), path, nulls)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        nulls.append({"path": path, "reason": "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")})
        return None
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "value"):  # enums
        return to_jsonable(obj.value, path, nulls)
    raise ValidationError(f"cannot serialize {type(obj).__name__} at {path or '/'}")


@dataclass
class ReportBundle:
    """Results of one subcommand run plus the metadata needed to reproduce it."""

    command: str
    seed: int
    config: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    tool_version: str = field(default_factory=_tool_version)
    created: str | None = None
    nulls: list[dict] = field(default_factory=list)
    artifacts: dict[str, str] = field(default_factory=dict, repr=False)

    def body(self) -> dict:
        nulls: list = []
        out = {
            "format_version": FORMAT_VERSION,
            "metadata": {"tool": "benchstab", "tool_version": self.tool_version,
                         "command": self.command, "seed": int(self.seed)},
            "config": to_jsonable(self.config, "/config", nulls),
            "results": to_jsonable(self.results, "/results", nulls),
            "warnings": list(self.warnings),
        }
        # nulls read back from an earlier report are kept, so a reload round-trips
        merged = {(n["path"], n["reason"]) for n in [*self.nulls, *nulls]}
        out["nulls"] = [{"path": a, "reason": b} for a, b in sorted(merged)]
        return out

    def to_json(self) -> str:
        return json.dumps(self.body(), sort_keys=True, indent=1, separators=(",", ": "),
                          ensure_ascii=False, allow_nan=False) + "\n"

    def digest(self) -> str:
        """SHA-256 of the canonical report body."""
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()

    def meta(self, extra: dict | None = None) -> dict:
        created = self.created or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        return {"created": created, "report_sha256": self.digest(), **(extra or {})}

    def write(self, path, extra_meta: dict | None = None) -> Path:
        """Write the report and its ``.meta.json`` sidecar; returns the report path."""
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(self.to_json(), encoding="utf-8")
        side = p.with_name(p.stem + ".meta.json")
        side.write_text(json.dumps(self.meta(extra_meta), sort_keys=True, indent=1) + "\n", encoding="utf-8")
        return p

    @classmethod
    def from_json(cls, text: str) -> ReportBundle:
        d = json.loads(text)
        if d.get("format_version") != FORMAT_VERSION:
            raise ValidationError(f"unsupported report format {d.get('format_version')!r}")
        md = d["metadata"]
        return cls(md["command"], md["seed"], d["config"], d["results"], d["warnings"], md["tool_version"],
                   nulls=d.get("nulls", []))

    @classmethod
    def read(cls, path) -> ReportBundle:
        return cls.from_json(Path(path).read_text(encoding="utf-8"))
