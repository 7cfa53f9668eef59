"""Binary field snapshots.

Layout, all little endian: magic "NLSF", version u32 = 1, dim u32, per-axis
point counts u64 each, box half-width f64, eps f64, time f64, then the field
samples row-major as interleaved (re, im) f64 pairs.  Round-trips bit exactly.
"""

import struct

import numpy as np

from .grids import GridSpec, WaveField

MAGIC = b"NLSF"
VERSION = 1


class SnapshotFormatError(IOError):
    pass


def write_snapshot(path, u: WaveField, eps: float, time: float):
    grid = u.grid
    header = MAGIC + struct.pack("<II", VERSION, grid.dim)
    header += struct.pack("<" + "Q" * grid.dim, *grid.shape)
    header += struct.pack("<ddd", grid.half_width, eps, time)
    payload = np.ascontiguousarray(u.values, dtype="<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_snapshot(path):
    """Returns (WaveField, eps, time)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise SnapshotFormatError(f"bad magic {magic!r} in {path}")
        version, dim = struct.unpack("<II", fh.read(8))
        if version != VERSION:
            raise SnapshotFormatError(f"unsupported version {version} in {path}")
        if not (1 <= dim <= 8):
            raise SnapshotFormatError(f"implausible dim {dim} in {path}")
        sizes = struct.unpack("<" + "Q" * dim, fh.read(8 * dim))
        half_width, eps, time = struct.unpack("<ddd", fh.read(24))
        count = 1
        for s in sizes:
            count *= s
        payload = fh.read(16 * count)
        if len(payload) != 16 * count:
            raise SnapshotFormatError(f"truncated payload in {path}")
        trailing = fh.read(1)
        if trailing:
            raise SnapshotFormatError(f"trailing bytes in {path}")
    values = np.frombuffer(payload, dtype="<c16").reshape(sizes).copy()
    if len(set(sizes)) != 1:
        raise SnapshotFormatError(f"anisotropic grids unsupported, sizes {sizes}")
    grid = GridSpec(dim, sizes[0], half_width)
    return WaveField(grid, values), eps, time
