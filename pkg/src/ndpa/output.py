"""Deterministic CSV/JSON/binary emitters shared by the library and CLI.

CSV files are RFC-4180 style with '#'-prefixed comment lines carrying a
schema version and provenance key=value pairs before the header row.
Non-finite values are written as the explicit markers ``inf``/``-inf``
(and parsed back by the readers here), so divergence flags survive a
round trip through flat files.
"""

from __future__ import annotations

import csv
import io
import json
import math
import struct
from pathlib import Path

import numpy as np

CSV_SCHEMA = "ndpa-csv/1"
TRAJ_MAGIC = b"NDPATRAJ"
TRAJ_VERSION = 1


def format_float(value) -> str:
    """Stable, locale-free rendering; infinities become 'inf' markers."""
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "nan"
    return repr(value)


def parse_float(text: str) -> float:
    return float(text)


def write_csv(path, columns, rows, comments: dict | None = None) -> None:
    """Write rows with a commented schema/provenance preamble.

    ``path`` may be a filesystem path or a text stream (for stdout).
    """
    header_lines = [f"# schema={CSV_SCHEMA}"]
    for key, value in (comments or {}).items():
        header_lines.append(f"# {key}={value}")

    def _emit(stream) -> None:
        for line in header_lines:
            stream.write(line + "\r\n")
        writer = csv.writer(stream, lineterminator="\r\n")
        writer.writerow(columns)
        writer.writerows(rows)

    if hasattr(path, "write"):
        _emit(path)
    else:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            _emit(handle)


def read_csv(path) -> tuple[dict, list[str], list[list[str]]]:
    """Read back a CSV written by :func:`write_csv`.

    Returns (comments, columns, rows-of-strings).
    """
    comments: dict[str, str] = {}
    if hasattr(path, "read"):
        text = path.read()
    else:
        text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    body_start = 0
    for idx, line in enumerate(lines):
        if not line.startswith("#"):
            body_start = idx
            break
        stripped = line[1:].strip()
        if "=" in stripped:
            key, _, value = stripped.partition("=")
            comments[key.strip()] = value.strip()
    reader = csv.reader(io.StringIO("\n".join(lines[body_start:])))
    table = [row for row in reader if row]
    if not table:
        return comments, [], []
    return comments, table[0], table[1:]


def _json_default(value):
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return format_float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON-serializable: {type(value)!r}")


def dump_json(payload, path=None, indent: int = 1):
    """JSON dump with inf/nan rendered as explicit string markers."""

    def _clean(obj):
        if isinstance(obj, dict):
            return {k: _clean(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [_clean(v) for v in obj]
        if isinstance(obj, (np.floating, np.integer)):
            obj = obj.item()
        if isinstance(obj, float) and not math.isfinite(obj):
            return format_float(obj)
        if isinstance(obj, np.ndarray):
            return _clean(obj.tolist())
        return obj

    text = json.dumps(_clean(payload), indent=indent, default=_json_default,
                      sort_keys=True)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def write_trajectory_dump(path, data: np.ndarray, seed: int) -> None:
    """Flat little-endian float64 dump with a shape/seed header.

    Layout: magic, uint32 version, int64 seed, uint64 ndim, uint64 shape
    entries, then the array data (C order, '<f8').
    """
    array = np.ascontiguousarray(data, dtype="<f8")
    with open(path, "wb") as handle:
        handle.write(TRAJ_MAGIC)
        handle.write(struct.pack("<I", TRAJ_VERSION))
        handle.write(struct.pack("<q", int(seed)))
        handle.write(struct.pack("<Q", array.ndim))
        for extent in array.shape:
            handle.write(struct.pack("<Q", extent))
        handle.write(array.tobytes(order="C"))


def read_trajectory_dump(path) -> tuple[np.ndarray, int]:
    with open(path, "rb") as handle:
        magic = handle.read(len(TRAJ_MAGIC))
        if magic != TRAJ_MAGIC:
            raise ValueError(f"{path}: not a trajectory dump")
        (version,) = struct.unpack("<I", handle.read(4))
        if version != TRAJ_VERSION:
            raise ValueError(f"{path}: unsupported dump version {version}")
        (seed,) = struct.unpack("<q", handle.read(8))
        (ndim,) = struct.unpack("<Q", handle.read(8))
        shape = tuple(struct.unpack("<Q", handle.read(8))[0]
                      for _ in range(ndim))
        data = np.frombuffer(handle.read(), dtype="<f8").reshape(shape)
    return data, seed
