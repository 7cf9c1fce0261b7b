"""Snapshot and diagnostics file formats.

Snapshot layout (all little-endian)::

    b"CHDG" | u32 version=1 | u32 ndims | u32 dims[ndims] | f64 time
    | f64 length[ndims] | f64 values (row-major)
"""
from __future__ import annotations

import csv
import struct

import numpy as np

from .diagnostics import CSV_COLUMNS

MAGIC = b"CHDG"
VERSION = 1


class FormatError(ValueError):
    pass


def encode_snapshot(u, t, length):
    u = np.ascontiguousarray(u, dtype="<f8")
    length = np.atleast_1d(np.asarray(length, dtype="<f8"))
    if u.ndim != length.size:
        raise ValueError("length must have one entry per axis")
    head = MAGIC + struct.pack(f"<II{u.ndim}I", VERSION, u.ndim, *u.shape)
    return head + struct.pack("<d", float(t)) + length.tobytes() + u.tobytes()


def decode_snapshot(data):
    if data[:4] != MAGIC:
        raise FormatError("not a CHDG snapshot")
    version, ndims = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise FormatError(f"unsupported snapshot version {version}")
    if ndims not in (1, 2):
        raise FormatError(f"bad ndims {ndims}")
    off = 12
    dims = struct.unpack_from(f"<{ndims}I", data, off)
    off += 4 * ndims
    (t,) = struct.unpack_from("<d", data, off)
    off += 8
    length = np.frombuffer(data, "<f8", ndims, off).astype(float)
    off += 8 * ndims
    count = int(np.prod(dims))
    if len(data) != off + 8 * count:
        raise FormatError("snapshot size does not match its header")
    u = np.frombuffer(data, "<f8", count, off).astype(float).reshape(dims)
    return u, t, tuple(float(v) for v in length)


def write_snapshot(path, u, t, length):
    with open(path, "wb") as fh:
        fh.write(encode_snapshot(u, t, length))


def read_snapshot(path):
    with open(path, "rb") as fh:
        return decode_snapshot(fh.read())


def write_diagnostics_csv(path, records):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([repr(float(v)) for v in rec.row()])


def read_diagnostics_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise FormatError(f"unexpected CSV header {header}")
        return np.array([[float(v) for v in row] for row in reader])
