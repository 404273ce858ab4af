"""Deterministic CSV artifacts with embedded provenance and content hash.

Every artifact starts with two comment lines:

    # run: {...}            <- the configuration that produced the file
    # content-sha256: ...   <- hash of everything after this line

followed by a plain CSV body.  The run record is serialized with sorted
keys and the numeric fields with fixed 12-significant-digit formatting,
so rerunning the same configuration reproduces the file byte for byte
regardless of worker count or platform float printing quirks.

Formats:
  boundary  header ``t,b1,b2``; one row per grid time ascending; ``inf``
            written literally for an unbounded upper edge; both band
            fields left empty for times before the band exists.
  value     header ``t,x,V,G,region`` on a rectangular probe grid.
  regret    header ``rule,estimate,stderr,n_paths,dt,seed``.
"""
from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError, MismatchError

__all__ = [
    "format_number",
    "write_artifact",
    "read_artifact",
    "write_boundary_csv",
    "read_boundary_csv",
    "write_value_csv",
    "write_regret_csv",
]


def format_number(x: float) -> str:
    """Fixed 12-significant-digit rendering; empty string for NaN."""
    x = float(x)
    if math.isnan(x):
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def _meta_json(meta: dict) -> str:
    def default(obj):
        raise TypeError(f"run metadata must be JSON-serializable, got {type(obj)}")

    return json.dumps(meta, sort_keys=True, separators=(", ", ": "), default=default)


def write_artifact(path, meta: dict, header: str, rows) -> str:
    """Write a hashed CSV artifact; returns the content hash."""
    lines = [header]
    for row in rows:
        lines.append(",".join(row))
    body = "\n".join(lines) + "\n"
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    text = f"# run: {_meta_json(meta)}\n# content-sha256: {digest}\n{body}"
    Path(path).write_text(text, encoding="utf-8", newline="\n")
    return digest


def read_artifact(path) -> tuple[dict, list[list[str]]]:
    """Read a hashed artifact back; verifies the content hash.

    Returns (run metadata, rows including the header row).
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if len(lines) < 3 or not lines[0].startswith("# run: "):
        raise ConfigError(f"{path} is not a run artifact (missing '# run:' line)")
    if not lines[1].startswith("# content-sha256: "):
        raise ConfigError(f"{path} is missing its content hash line")
    meta = json.loads(lines[0][len("# run: "):])
    claimed = lines[1][len("# content-sha256: "):].strip()
    body = "\n".join(lines[2:])
    actual = hashlib.sha256(body.encode("utf-8")).hexdigest()
    if actual != claimed:
        raise MismatchError(
            f"{path} content hash mismatch: header says {claimed[:12]}…, body is {actual[:12]}…"
        )
    rows = [line.split(",") for line in lines[2:] if line]
    return meta, rows


def write_boundary_csv(path, table, meta: dict) -> str:
    """Boundary table -> ``t,b1,b2`` artifact (see module docstring)."""

    def rows():
        for t, b1, b2 in zip(table.grid, table.b1, table.b2):
            yield (format_number(t), format_number(b1), format_number(b2))

    return write_artifact(path, meta, "t,b1,b2", rows())


def read_boundary_csv(path) -> tuple[dict, np.ndarray, np.ndarray, np.ndarray]:
    """Read a boundary artifact back as (meta, t, b1, b2) with NaN gaps."""
    meta, rows = read_artifact(path)
    if rows[0] != ["t", "b1", "b2"]:
        raise ConfigError(f"{path} does not have a boundary header, got {rows[0]}")

    def parse(s: str) -> float:
        return float(s) if s else math.nan

    data = np.array([[parse(c) for c in row] for row in rows[1:]])
    return meta, data[:, 0], data[:, 1], data[:, 2]


def write_value_csv(path, points, meta: dict) -> str:
    """Value-surface probe -> ``t,x,V,G,region`` artifact.

    `points` yields (t, x, ValueResult) triples.
    """

    def rows():
        for t, x, res in points:
            yield (
                format_number(t),
                format_number(x),
                format_number(res.v),
                format_number(res.g),
                res.region,
            )

    return write_artifact(path, meta, "t,x,V,G,region", rows())


def write_regret_csv(path, estimates, meta: dict) -> str:
    """Rule estimates -> ``rule,estimate,stderr,n_paths,dt,seed`` artifact."""

    def rows():
        for e in estimates:
            yield (
                e.rule,
                format_number(e.estimate),
                format_number(e.stderr),
                str(e.n_paths),
                format_number(e.dt),
                str(e.seed),
            )

    return write_artifact(path, meta, "rule,estimate,stderr,n_paths,dt,seed", rows())
