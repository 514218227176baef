"""Binary trajectory files.

Layout (all multi-byte values in the byte order named by the tag byte)::

    magic     8 bytes   b"NSMTRJ01"
    tag       1 byte    b"<" little endian, b">" big endian
    d         uint32
    N         uint32    grid points per axis
    count     uint32    number of stored nodes
    L         float64   box length
    gamma     float64   time-grid grading
    then per node:
      t       float64
      d blocks of complex128 half-spectrum coefficients, row-major
"""

from __future__ import annotations

import struct
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"NSMTRJ01"
_HEAD = "IIIdd"


class TrajectoryFileError(ValueError):
    pass


@dataclass(frozen=True)
class TrajectoryHeader:
    d: int
    grid_points: int
    count: int
    box_length: float
    gamma: float
    byteorder: str = "<"

    @property
    def spectral_shape(self):
        n = self.grid_points
        return (n,) * (self.d - 1) + (n // 2 + 1,)


def write_trajectory(path, domain, times, coeffs, gamma=1.0, byteorder=None):
    """Write ``coeffs[count, d, *spectral_shape]`` sampled at ``times``."""
    times = np.asarray(times, dtype=np.float64).ravel()
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    if coeffs.ndim != domain.d + 2 or coeffs.shape[0] != times.size:
        raise TrajectoryFileError("coefficient array does not match the time list")
    if coeffs.shape[1] != domain.d or coeffs.shape[2:] != domain.spectral_shape:
        raise TrajectoryFileError("coefficient blocks do not match the domain")
    if byteorder is None:
        byteorder = "<" if sys.byteorder == "little" else ">"
    if byteorder not in "<>" or len(byteorder) != 1:
        raise TrajectoryFileError(f"byte order must be '<' or '>', got {byteorder!r}")
    head = struct.pack(
        byteorder + _HEAD,
        domain.d,
        domain.grid_points,
        times.size,
        float(domain.box_length),
        float(gamma),
    )
    tdt = np.dtype(byteorder + "f8")
    cdt = np.dtype(byteorder + "c16")
    with open(path, "wb") as fh:
        fh.write(MAGIC + byteorder.encode())
        fh.write(head)
        for t, block in zip(times, coeffs):
            fh.write(np.asarray(t, dtype=tdt).tobytes())
            fh.write(np.ascontiguousarray(block, dtype=cdt).tobytes(order="C"))
    return Path(path)


def read_trajectory(path):
    """Return ``(header, times, coeffs)`` in native byte order."""
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise TrajectoryFileError(f"{path}: not a trajectory file")
    order = raw[8:9].decode("ascii", "replace")
    if order not in ("<", ">"):
        raise TrajectoryFileError(f"{path}: bad byte-order tag {order!r}")
    hsize = struct.calcsize(order + _HEAD)
    try:
        d, n, count, box, gamma = struct.unpack_from(order + _HEAD, raw, 9)
    except struct.error as exc:
        raise TrajectoryFileError(f"{path}: truncated header") from exc
    header = TrajectoryHeader(d, n, count, box, gamma, order)
    if d not in (2, 3) or n < 2:
        raise TrajectoryFileError(f"{path}: implausible header {header}")
    block = d * int(np.prod(header.spectral_shape))
    rec = 8 + 16 * block
    body = raw[9 + hsize :]
    if len(body) != rec * count:
        raise TrajectoryFileError(
            f"{path}: expected {rec * count} payload bytes, found {len(body)}"
        )
    rows = np.frombuffer(
        body, dtype=np.dtype([("t", order + "f8"), ("c", order + "c16", (block,))])
    )
    times = rows["t"].astype(np.float64)
    coeffs = rows["c"].astype(np.complex128).reshape((count, d) + header.spectral_shape)
    return header, times, coeffs


def save_trajectory(path, traj, byteorder=None):
    return write_trajectory(
        path, traj.domain, traj.times, traj.coeffs, traj.grid.gamma, byteorder
    )


def load_trajectory(path):
    """Rebuild a :class:`~nsmild.trajectory.Trajectory` from a file."""
    from .spectral import Domain
    from .trajectory import TimeGrid, Trajectory

    header, times, coeffs = read_trajectory(path)
    dom = Domain(header.d, header.box_length, header.grid_points)
    grid = TimeGrid(times, max(header.gamma, 1.0))
    return Trajectory(dom, grid, coeffs)
