"""Binary weight checkpoints: named arrays with a version header.

Layout (all integers little-endian):

    magic   6 bytes  b"GFWTS\\x00"
    version u16      currently 1
    count   u32      number of arrays
    entry * count:
        name_len u16, name utf-8
        dtype    u8   (1 = float64, 2 = float32, 3 = int64)
        ndim     u8
        dims     ndim * u32
        data     raw little-endian array bytes, C order

Arrays are written sorted by name, so save(load(path)) reproduces the
file byte for byte and fresh saves of equal contents are identical.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import DataError

MAGIC = b"GFWTS\x00"
VERSION = 1

_DTYPE_CODES = {1: np.dtype("<f8"), 2: np.dtype("<f4"), 3: np.dtype("<i8")}
_CODE_FOR = {np.dtype("float64"): 1, np.dtype("float32"): 2, np.dtype("int64"): 3}


def save_checkpoint(path, arrays: dict[str, np.ndarray]) -> None:
    path = Path(path)
    chunks = [MAGIC, struct.pack("<HI", VERSION, len(arrays))]
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        if arr.dtype not in _CODE_FOR:
            raise DataError(f"checkpoint: unsupported dtype {arr.dtype} for '{name}'")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<BB", _CODE_FOR[arr.dtype], arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(arr.astype(arr.dtype.newbyteorder("<")).tobytes(order="C"))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b"".join(chunks))


def load_checkpoint(path) -> dict[str, np.ndarray]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"checkpoint not found: {path}")
    raw = path.read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise DataError(f"not a weight checkpoint (bad magic): {path}")
    offset = len(MAGIC)
    version, count = struct.unpack_from("<HI", raw, offset)
    offset += 6
    if version != VERSION:
        raise DataError(f"unsupported checkpoint version {version} in {path}")
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", raw, offset)
        offset += 2
        name = raw[offset : offset + name_len].decode("utf-8")
        offset += name_len
        code, ndim = struct.unpack_from("<BB", raw, offset)
        offset += 2
        if code not in _DTYPE_CODES:
            raise DataError(f"unknown dtype code {code} for '{name}' in {path}")
        dims = struct.unpack_from(f"<{ndim}I", raw, offset)
        offset += 4 * ndim
        dtype = _DTYPE_CODES[code]
        n_items = int(np.prod(dims, dtype=np.int64)) if ndim else 1
        arr = np.frombuffer(raw, dtype=dtype, count=n_items, offset=offset).reshape(dims)
        offset += n_items * dtype.itemsize
        out[name] = arr.copy()
    return out
