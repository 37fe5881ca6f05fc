"""Binary weight container.

Layout (little-endian, no padding)::

    b"PNPW"  u32 version=1  u32 count
    count x { u16 name_len, name (utf-8), u8 rank, u64 dims[rank], f64 data[prod(dims)] }
"""
from __future__ import annotations

import struct

import numpy as np

MAGIC = b"PNPW"
VERSION = 1


class ContainerError(ValueError):
    pass


def dump_tensors(tensors: dict[str, np.ndarray]) -> bytes:
    out = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype="<f8")
        raw = name.encode("utf-8")
        out.append(struct.pack("<H", len(raw)))
        out.append(raw)
        out.append(struct.pack("<B", arr.ndim))
        out.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        out.append(arr.tobytes(order="C"))
    return b"".join(out)


def parse_tensors(buf: bytes) -> dict[str, np.ndarray]:
    buf = bytes(buf)
    if buf[:4] != MAGIC:
        raise ContainerError("bad magic, not a PNPW container")
    try:
        version, count = struct.unpack_from("<II", buf, 4)
    except struct.error as e:
        raise ContainerError("truncated header") from e
    if version != VERSION:
        raise ContainerError(f"unsupported container version {version}")
    pos = 12
    tensors: dict[str, np.ndarray] = {}
    try:
        for _ in range(count):
            (n,) = struct.unpack_from("<H", buf, pos)
            pos += 2
            name = buf[pos:pos + n].decode("utf-8")
            pos += n
            (rank,) = struct.unpack_from("<B", buf, pos)
            pos += 1
            dims = struct.unpack_from(f"<{rank}Q", buf, pos)
            pos += 8 * rank
            size = int(np.prod(dims, dtype=np.int64)) if rank else 1
            if pos + 8 * size > len(buf):
                raise ContainerError(f"truncated data for tensor {name!r}")
            data = np.frombuffer(buf, dtype="<f8", count=size, offset=pos)
            pos += 8 * size
            if name in tensors:
                raise ContainerError(f"duplicate tensor {name!r}")
            arr = data.astype(np.float64).reshape(dims)
            arr.flags.writeable = False
            tensors[name] = arr
    except struct.error as e:
        raise ContainerError("truncated container") from e
    if pos != len(buf):
        raise ContainerError(f"{len(buf) - pos} trailing bytes after last tensor")
    return tensors
