"""Canonical experiment records, CSV tables and gnuplot data files.

Records serialise with sorted keys, two-space indentation, integers as
integers and floats with 17 significant digits, so identical inputs give
identical bytes and ``dumps(loads(s)) == s``.
"""

from __future__ import annotations

import json
import math
import os
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__

SCHEMA_VERSION = 1


def _float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, Fraction):
        return json.dumps(str(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for k in sorted(obj):
            if not isinstance(k, str):
                raise TypeError(f"record keys must be strings, got {k!r}")
            items.append(json.dumps(k) + ": " + _encode(obj[k], indent, level + 1))
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        return "[" + pad + ("," + pad).join(_encode(v, indent, level + 1) for v in obj) + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def loads(text: str) -> Any:
    return json.loads(text)


def make_record(command: str, params: dict, outputs: dict, wall_time: float | None = None) -> dict:
    provenance = {"tool": "affinv", "version": __version__}
    if wall_time is not None:
        provenance["wall_time"] = wall_time
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "params": params,
        "outputs": outputs,
        "provenance": provenance,
    }


def write_text(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_csv(path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    write_text(path, "\n".join(lines) + "\n")


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return _float(float(v))
    return str(v)


def _dat(path: Path, header: str, rows) -> Path:
    body = "".join(" ".join(_cell(v) for v in row) + "\n" for row in rows)
    write_text(path, f"# {header}\n" + body)
    return path


def emit_plots(record: dict, out_dir) -> list[Path]:
    """Write whitespace-separated two-or-more-column data files for gnuplot."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    command = record["command"]
    outputs = record["outputs"]
    written = []
    if command == "sweep":
        rows = [(math.log(int(r["p"])), r["median_max_defect"])
                for r in outputs.get("per_p", []) if r.get("median_max_defect") is not None]
        written.append(_dat(out_dir / "defect_trend.dat", "log_p median_max_defect", rows))
    elif command == "certificate":
        cert = outputs["certificate"]
        written.append(_dat(out_dir / "mu_mass.dat", "N interval_mass", cert.get("mass_profile", [])))
        rows = [(d["q"], d["tv_mu"], d["tv_lambda"], d["e_valuation"]) for d in cert["per_prime"]]
        written.append(_dat(out_dir / "per_q.dat", "q tv_mu tv_lambda e_valuation", rows))
    elif command == "coupling" and "sweep" in outputs:
        rows = outputs["sweep"].get("max_ratio_by_n", [])
        written.append(_dat(out_dir / "coupling_ratio.dat", "n max_ratio", rows))
    elif command == "measure":
        rows = [(g["a"], g["b"], g["defect"]) for g in outputs["defect"]["grid"]]
        written.append(_dat(out_dir / "defect_grid.dat", "a b defect", rows))
    return written
