"""CSV / PGM / JSON output helpers.

CSV files use a header row, '.' decimals and '\\n' line endings; floats are
written as the shortest repr that round-trips exactly.
PGM images are plain ``P2`` with maxval 255 (white 255, black 0).
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import MnnLabError, ValidationError
from .images import BinaryImage

__all__ = [
    "export_csv",
    "export_pgm",
    "read_csv",
    "read_pgm",
    "sha256_file",
    "trajectory_header",
    "write_json",
]


class OutputError(MnnLabError):
    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def export_csv(path, header, rows):
    """Write ``rows`` (iterable of sequences or a 2-D array) under ``header``."""
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValidationError(f"row has {len(row)} fields, header has {len(header)}")
        lines.append(",".join(_fmt(v) for v in row))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OutputError(str(exc), path) from exc
    return path


def read_csv(path):
    """Return ``(header, data)`` with data as a float array (one row per line)."""
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    header = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]], dtype=float)
    return header, data.reshape(len(lines) - 1, len(header))


def trajectory_header(net):
    n = net.n
    cols = ["t"] + [f"v_{i + 1}" for i in range(n)] + [f"phis_{i + 1}" for i in range(n)]
    cols += [f"phi_{i + 1}_{j + 1}" for i, j in net.topology.pairs]
    return cols


def export_pgm(path, img):
    path = Path(path)
    px = np.where(img.pixels, 255, 0)
    lines = ["P2", f"{img.cols} {img.rows}", "255"]
    lines += [" ".join(str(int(v)) for v in row) for row in px]
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OutputError(str(exc), path) from exc
    return path


def read_pgm(path, threshold=128):
    """Read a plain (P2) or raw (P5) PGM into a :class:`BinaryImage`."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise OutputError(str(exc), path) from exc
    magic = raw[:2]
    if magic == b"P2":
        tokens = [t for ln in raw.decode("ascii").splitlines()
                  for t in ln.split("#", 1)[0].split()]
        w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
        vals = np.array([int(t) for t in tokens[4:4 + w * h]])
    elif magic == b"P5":
        parts, pos = [], 2
        while len(parts) < 3:
            while raw[pos:pos + 1].isspace():
                pos += 1
            if raw[pos:pos + 1] == b"#":
                pos = raw.index(b"\n", pos) + 1
                continue
            start = pos
            while not raw[pos:pos + 1].isspace():
                pos += 1
            parts.append(int(raw[start:pos]))
        w, h, maxval = parts
        vals = np.frombuffer(raw[pos + 1:pos + 1 + w * h], dtype=np.uint8).astype(int)
    else:
        raise ValidationError("not a PGM file", str(path))
    if vals.size != w * h:
        raise ValidationError(f"expected {w * h} pixels, found {vals.size}", str(path))
    scaled = vals * 255 // max(maxval, 1)
    return BinaryImage(scaled.reshape(h, w) >= threshold)


def write_json(path, obj):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
    except OSError as exc:
        raise OutputError(str(exc), path) from exc
    return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
