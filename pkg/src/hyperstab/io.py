"""Flat-file writers: CSV with full float precision and 16-bit PGM images."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return "%.17g" % v
    return str(v)


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    return path


def read_csv(path):
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader]


def write_pgm(path, image, scale_path=None) -> Path:
    """Autoscaled 16-bit binary PGM plus a sidecar ``min max`` text file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise ValueError("PGM images must be 2-D")
    lo, hi = float(image.min()), float(image.max())
    if hi > lo:
        scaled = np.rint((image - lo) / (hi - lo) * 65535.0)
    else:
        scaled = np.zeros_like(image)
    data = scaled.astype(">u2")
    rows, cols = image.shape
    with path.open("wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n65535\n".encode("ascii"))
        fh.write(data.tobytes())
    scale_path = Path(scale_path) if scale_path else path.with_suffix(".scale.txt")
    scale_path.write_text(f"min {format_value(lo)}\nmax {format_value(hi)}\n")
    return path


def read_pgm(path):
    """Return ``(pixels, (min, max))`` from a PGM written by :func:`write_pgm`."""
    path = Path(path)
    raw = path.read_bytes()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    cols, rows = (int(t) for t in parts[1].split())
    pixels = np.frombuffer(parts[3], dtype=">u2").reshape(rows, cols)
    scale = {}
    sidecar = path.with_suffix(".scale.txt")
    if sidecar.exists():
        for line in sidecar.read_text().splitlines():
            key, value = line.split()
            scale[key] = float(value)
    return pixels, (scale.get("min"), scale.get("max"))


def write_json(path, payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path
