"""CSV and key=value text helpers with byte-stable float formatting."""
from __future__ import annotations

import csv
import math

import numpy as np


def fmt(x) -> str:
    """17 significant digits, enough to round-trip any double."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def write_csv(path, header, rows, preamble=()):
    """Write rows (2-D array or iterable of sequences) with a header line.

    ``preamble`` lines (e.g. ``lambda0=...``) are written before the header.
    """
    with open(path, "w", newline="") as fh:
        for line in preamble:
            fh.write(line + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_csv(path, skip_preamble=True):
    """Read a CSV written by :func:`write_csv`; returns (header, float array, preamble)."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    pre = []
    while skip_preamble and lines and "=" in lines[0] and "," not in lines[0]:
        pre.append(lines.pop(0))
    reader = csv.reader(lines)
    header = next(reader)
    data = [[float(v) if v != "" else math.nan for v in row] for row in reader]
    return header, np.array(data, dtype=float).reshape(-1, len(header)), pre


def write_kv(path, items: dict):
    """Write a flat ``key=value`` text file in insertion order."""
    with open(path, "w") as fh:
        for k, v in items.items():
            if isinstance(v, (list, tuple)):
                v = ";".join(fmt(x) for x in v)
            fh.write(f"{k}={fmt(v)}\n")


def read_kv(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                k, v = line.split("=", 1)
                out[k.strip()] = v.strip()
    return out
