"""ATTN0001 tensor files: magic, u32 ndim, u64 dims, dtype byte, LE payload."""

import struct

import numpy as np

MAGIC = b"ATTN0001"
_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_CODES = {np.dtype("<f4"): 1, np.dtype("<f8"): 2}


def write_tensor(path, array):
    a = np.asarray(array)
    dt = a.dtype.newbyteorder("<")
    if dt not in _CODES:
        raise ValueError(f"unsupported dtype {a.dtype}, expected float32 or float64")
    if not np.all(np.isfinite(a)):
        raise ValueError("tensor has non-finite values")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", a.ndim))
        f.write(struct.pack(f"<{a.ndim}Q", *a.shape))
        f.write(bytes([_CODES[dt]]))
        f.write(np.ascontiguousarray(a, dtype=dt).tobytes())


def read_tensor(path):
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:8] != MAGIC:
        raise ValueError(f"{path}: bad magic")
    (ndim,) = struct.unpack_from("<I", raw, 8)
    dims = struct.unpack_from(f"<{ndim}Q", raw, 12)
    pos = 12 + 8 * ndim
    dt = _DTYPES.get(raw[pos])
    if dt is None:
        raise ValueError(f"{path}: unknown dtype code {raw[pos]}")
    pos += 1
    n = int(np.prod(dims, dtype=np.uint64))
    if len(raw) != pos + n * dt.itemsize:
        raise ValueError(f"{path}: payload is {len(raw) - pos} bytes, expected {n * dt.itemsize}")
    return np.frombuffer(raw, dtype=dt, offset=pos).reshape(dims)
