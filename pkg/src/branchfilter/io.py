"""CSV and JSON formats used by the command line tools.

CSV files may start with ``#`` comment lines carrying run metadata; the
first non-comment line is the header. Trajectories use ``n,x,z`` and
observation files ``n,z``.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .errors import BranchFilterError


class InputParseError(BranchFilterError, ValueError):
    """A malformed input file; the message names the offending line."""


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def meta_line(meta: dict) -> str:
    return "# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n"


def read_series(path):
    """Read an ``n,z`` or ``n,x,z`` CSV.

    Returns ``(z, x)`` where ``x`` is ``None`` if the file has no ``x``
    column. Generations must run 0, 1, 2, ... without gaps.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputParseError(f"{path}: cannot read ({exc.strerror})") from None
    header = None
    xs, zs = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if header is None:
            header = fields
            if "n" not in header or "z" not in header:
                raise InputParseError(f"{path}:{lineno}: header must contain 'n' and 'z', got {line!r}")
            continue
        if len(fields) != len(header):
            raise InputParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(fields)}")
        row = dict(zip(header, fields))
        try:
            n = int(row["n"])
            z = int(row["z"])
            x = int(row["x"]) if "x" in row else None
        except ValueError:
            raise InputParseError(f"{path}:{lineno}: non-integer value in {line!r}") from None
        if n != len(zs):
            raise InputParseError(f"{path}:{lineno}: expected generation {len(zs)}, got {n}")
        if z < 0 or (x is not None and not 0 <= z <= x):
            raise InputParseError(f"{path}:{lineno}: need 0 <= z <= x, got {line!r}")
        zs.append(z)
        xs.append(x)
    if header is None:
        raise InputParseError(f"{path}: no header line")
    return zs, (xs if "x" in header else None)


def write_csv(path, header, rows, meta=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if meta:
            fh.write(meta_line(meta))
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, default=_json_default, allow_nan=False) + "\n"


def _json_default(obj):
    import numpy as np

    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
