"""Self-describing binary container for field snapshots.

Byte-exact layout (all integers little-endian):

    offset 0   magic, 8 bytes: b"LMSNAP01"
    offset 8   uint32: record count N
    then N records, each:
        uint16      name length in bytes
        bytes       record name, UTF-8
        uint8       dtype code (0 = float64 little-endian)
        uint8       ndim (0 encodes a scalar)
        ndim*uint32 shape, slowest axis first
        payload     C-order (row-major) float64 little-endian samples

Scalars (t, eps, length) are stored as ndim == 0 records.  Restart reads the
same format back into a state.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .compressible import CompressibleState
from .spectral import GridSpec

__all__ = [
    "MAGIC",
    "write_snapshot",
    "read_snapshot",
    "compressible_to_records",
    "compressible_from_records",
]

MAGIC = b"LMSNAP01"
_DTYPE_F64 = 0


def write_snapshot(path: str | Path, records: dict[str, np.ndarray]) -> None:
    """Write named float arrays (or scalars) to the container format."""
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(records)))
        for name, value in records.items():
            arr = np.ascontiguousarray(np.asarray(value, dtype="<f8"))
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<BB", _DTYPE_F64, arr.ndim))
            for extent in arr.shape:
                fh.write(struct.pack("<I", extent))
            fh.write(arr.tobytes(order="C"))


def read_snapshot(path: str | Path) -> dict[str, np.ndarray]:
    """Read a container back into a name -> array mapping."""
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise ValueError(f"{path}: bad magic {raw[:8]!r}, expected {MAGIC!r}")
    (count,) = struct.unpack_from("<I", raw, 8)
    offset = 12
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", raw, offset)
        offset += 2
        name = raw[offset : offset + name_len].decode("utf-8")
        offset += name_len
        dtype_code, ndim = struct.unpack_from("<BB", raw, offset)
        offset += 2
        if dtype_code != _DTYPE_F64:
            raise ValueError(f"{path}: unknown dtype code {dtype_code}")
        shape = struct.unpack_from(f"<{ndim}I", raw, offset) if ndim else ()
        offset += 4 * ndim
        size = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(raw, dtype="<f8", count=size, offset=offset).reshape(shape)
        offset += 8 * size
        out[name] = arr.copy() if ndim else arr.copy().reshape(())
    return out


def compressible_to_records(state: CompressibleState) -> dict[str, np.ndarray]:
    return {
        "q": state.q,
        "u": state.u,
        "H": state.H,
        "S": state.S,
        "t": np.float64(state.t),
        "eps": np.float64(state.eps),
        "length": np.float64(state.grid.length),
    }


def compressible_from_records(records: dict[str, np.ndarray]) -> CompressibleState:
    q = records["q"]
    grid = GridSpec(dim=q.ndim, n=q.shape[0], length=float(records["length"]))
    return CompressibleState(
        grid=grid,
        q=q,
        u=records["u"],
        H=records["H"],
        S=records["S"],
        eps=float(records["eps"]),
        t=float(records["t"]),
    )
