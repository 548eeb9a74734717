"""Byte-stable report emission: canonical JSON (sorted keys, 17 significant
digits for floats) and CSV with a fixed header."""

from __future__ import annotations

import hashlib
import math
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__


def format_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(float(x), ".17g")


def _dump(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        import json

        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        inner = ",".join(f"{_dump(str(k))}:{_dump(v)}" for k, v in items)
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_dump(v) for v in obj) + "]"
    try:  # numpy scalars
        import numpy as np

        if isinstance(obj, np.integer):
            return str(int(obj))
        if isinstance(obj, np.floating):
            return format_float(float(obj))
        if isinstance(obj, np.ndarray):
            return _dump(obj.tolist())
    except ImportError:  # pragma: no cover
        pass
    raise TypeError(f"cannot serialize {type(obj)!r}")


def canonical_json(obj) -> str:
    return _dump(obj)


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def emit_report(results, fmt: str, path, config: dict | None = None) -> None:
    """Write results to ``path``: JSON wraps them with version and config hash;
    CSV expects a list of flat dict rows and writes header + rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        payload = {
            "version": __version__,
            "config_hash": config_hash(config or {}),
            "results": results,
        }
        path.write_text(canonical_json(payload) + "\n")
        return
    if fmt == "csv":
        rows = list(results)
        if not rows:
            path.write_text("\n")
            return
        fields = sorted(rows[0].keys())
        lines = [",".join(fields)]
        for row in rows:
            cells = []
            for f in fields:
                v = row.get(f)
                if isinstance(v, float):
                    cells.append(format_float(v))
                else:
                    cells.append(str(v))
            lines.append(",".join(cells))
        path.write_text("\n".join(lines) + "\n")
        return
    raise ValueError(f"unknown report format {fmt!r}")
