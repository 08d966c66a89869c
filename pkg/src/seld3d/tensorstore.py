"""Self-describing binary container for real arrays.

Layout (all little-endian)::

    8 bytes   magic b"SELDTNSR"
    u8        dtype code (0 = float32, 1 = float64)
    u8        rank
    u64 x rank  dims
    payload   row-major raw values
"""

import os
import struct

import numpy as np

from .errors import FormatError

MAGIC = b"SELDTNSR"
_CODES = {np.dtype("<f4"): 0, np.dtype("<f8"): 1}
_DTYPES = {v: k for k, v in _CODES.items()}


def _as_tensor(arr):
    arr = np.asarray(arr)
    if arr.dtype == np.float32:
        return np.ascontiguousarray(arr, dtype="<f4")
    if arr.dtype == np.float64:
        return np.ascontiguousarray(arr, dtype="<f8")
    raise FormatError(f"unsupported dtype {arr.dtype}; store float32 or float64")


def dumps(arr) -> bytes:
    arr = _as_tensor(arr)
    if arr.ndim > 255 or arr.ndim == 0:
        raise FormatError("rank must be between 1 and 255")
    if any(d <= 0 for d in arr.shape):
        raise FormatError("dimensions must be positive")
    head = MAGIC + struct.pack("<BB", _CODES[arr.dtype], arr.ndim)
    head += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    return head + arr.tobytes(order="C")


def loads(buf: bytes) -> np.ndarray:
    if len(buf) < 10 or buf[:8] != MAGIC:
        raise FormatError("bad magic: not a tensor-store file")
    code, rank = struct.unpack_from("<BB", buf, 8)
    if code not in _DTYPES:
        raise FormatError(f"unknown dtype code {code}")
    if rank == 0:
        raise FormatError("rank 0 tensor")
    off = 10 + 8 * rank
    if len(buf) < off:
        raise FormatError("truncated header")
    shape = struct.unpack_from(f"<{rank}Q", buf, 10)
    if any(d == 0 for d in shape):
        raise FormatError("zero dimension")
    dtype = _DTYPES[code]
    n = int(np.prod(shape, dtype=np.int64))
    if len(buf) - off != n * dtype.itemsize:
        raise FormatError(f"payload is {len(buf) - off} bytes, expected {n * dtype.itemsize}")
    return np.frombuffer(buf, dtype=dtype, count=n, offset=off).reshape(shape).copy()


def save(arr, path) -> None:
    data = dumps(arr)
    with open(path, "wb") as fh:
        fh.write(data)


def load(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return loads(fh.read())


# ---------------------------------------------------------------------------
# named collections (parameters, checkpoints)

MANIFEST = "manifest.txt"


def save_dict(tensors: dict, directory) -> None:
    """Write one file per tensor plus ``manifest.txt`` (``name shape file``)."""
    os.makedirs(directory, exist_ok=True)
    lines = []
    for name in sorted(tensors):
        arr = np.asarray(tensors[name])
        if arr.ndim == 0:
            arr = arr.reshape(1)
        fname = name + ".tns"
        save(arr, os.path.join(directory, fname))
        lines.append(f"{name} {'x'.join(str(d) for d in arr.shape)} {fname}")
    with open(os.path.join(directory, MANIFEST), "w") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))


def load_dict(directory) -> dict:
    out = {}
    with open(os.path.join(directory, MANIFEST)) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                name, shape, fname = line.split()
            except ValueError:
                raise FormatError(f"bad manifest line: {line!r}") from None
            arr = load(os.path.join(directory, fname))
            if "x".join(str(d) for d in arr.shape) != shape:
                raise FormatError(f"{name}: manifest shape {shape} disagrees with file {arr.shape}")
            out[name] = arr
    return out
