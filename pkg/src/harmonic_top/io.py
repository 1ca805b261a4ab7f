"""Deterministic CSV and JSON writers with an embedded metadata header."""

from __future__ import annotations

import io
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__

TOOL = "harmonic-top"


def fmt(x) -> str:
    """Format a scalar for output: floats with 17 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    if isinstance(x, (complex, np.complexfloating)):
        return f"{fmt(x.real)}{'+' if x.imag >= 0 else '-'}{fmt(abs(x.imag))}j"
    if x is None:
        return ""
    return str(x)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):  # Enum
        return obj.value
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    return obj


def dumps_json(obj, indent: int = 2) -> str:
    """JSON text with sorted keys and 17-digit floats; NaN and inf become null."""
    out = io.StringIO()

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, dict):
            if not o:
                out.write("{}")
                return
            out.write("{\n")
            for i, k in enumerate(sorted(o)):
                out.write(f'{pad}"{_esc(k)}": ')
                enc(o[k], level + 1)
                out.write(",\n" if i < len(o) - 1 else "\n")
            out.write(end + "}")
        elif isinstance(o, list):
            if not o:
                out.write("[]")
                return
            if all(not isinstance(v, (dict, list)) for v in o):
                out.write("[" + ", ".join(_scalar(v) for v in o) + "]")
                return
            out.write("[\n")
            for i, v in enumerate(o):
                out.write(pad)
                enc(v, level + 1)
                out.write(",\n" if i < len(o) - 1 else "\n")
            out.write(end + "]")
        else:
            out.write(_scalar(o))

    enc(_plain(obj), 0)
    out.write("\n")
    return out.getvalue()


def _esc(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def _scalar(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return "null" if not math.isfinite(v) else format(v, ".17g")
    return f'"{_esc(str(v))}"'


def metadata(command: str, params, options: dict) -> dict:
    return {
        "tool": TOOL,
        "version": __version__,
        "command": command,
        "params": params.as_dict() if hasattr(params, "as_dict") else params,
        "options": options,
    }


def dumps_csv(columns, rows, meta: dict | None = None) -> str:
    """CSV text; the metadata is written as ``# `` prefixed JSON lines."""
    out = io.StringIO()
    if meta is not None:
        for line in dumps_json(meta).rstrip("\n").split("\n"):
            out.write("# " + line + "\n")
    out.write(",".join(columns) + "\n")
    for r in rows:
        out.write(",".join(_csv_cell(v) for v in r) + "\n")
    return out.getvalue()


def _csv_cell(v) -> str:
    s = fmt(v)
    if any(c in s for c in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def read_csv(path):
    """Read a file written by :func:`dumps_csv`; returns ``(meta, columns, rows)``."""
    import json

    meta_lines, body = [], []
    for line in Path(path).read_text().splitlines():
        (meta_lines if line.startswith("# ") else body).append(line)
    meta = json.loads("\n".join(l[2:] for l in meta_lines)) if meta_lines else None
    cols = body[0].split(",")
    rows = [l.split(",") for l in body[1:]]
    return meta, cols, rows


def write_text(text: str, path=None):
    """Write to ``path`` or to stdout when ``path`` is None or ``-``."""
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return None
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", newline="\n") as fh:
        fh.write(text)
    return p
