"""Model checkpoint container.

Layout (little-endian)::

    magic   : 4 bytes b"BSCK"
    version : u32 (currently 1)
    hlen    : u64 length of the JSON header in bytes
    header  : UTF-8 JSON {"meta": {...}, "arrays": [{name, shape, dtype}, ...]}
    data    : raw array bytes in header order, C order

Floats inside the JSON header are written by Python's repr via json, which
round-trips exactly; array payloads are raw bytes, so save/load is bit-exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .tensor import Tensor

MAGIC = b"BSCK"
VERSION = 1

_DTYPES = {"float32": np.float32, "float64": np.float64}


class CheckpointError(ValueError):
    pass


def save_checkpoint(path: str | Path, params: dict[str, Tensor],
                    meta: dict) -> None:
    """Write named parameters plus a JSON-serializable metadata dict."""
    names = sorted(params)
    arrays = []
    blobs = []
    for name in names:
        arr = np.ascontiguousarray(params[name].data)
        if arr.dtype.name not in _DTYPES:
            raise CheckpointError(f"unsupported dtype {arr.dtype} for {name}")
        arrays.append({"name": name, "shape": list(arr.shape),
                       "dtype": arr.dtype.name})
        blobs.append(arr.astype(arr.dtype.newbyteorder("<")).tobytes())
    header = json.dumps({"meta": meta, "arrays": arrays},
                        sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQ", VERSION, len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path: str | Path) -> tuple[dict[str, Tensor], dict]:
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint file")
        version, hlen = struct.unpack("<IQ", fh.read(12))
        if version != VERSION:
            raise CheckpointError(f"{path}: unsupported version {version}")
        header = json.loads(fh.read(hlen).decode("utf-8"))
        params: dict[str, Tensor] = {}
        for entry in header["arrays"]:
            dtype = np.dtype(_DTYPES[entry["dtype"]]).newbyteorder("<")
            count = int(np.prod(entry["shape"])) if entry["shape"] else 1
            data = np.frombuffer(fh.read(count * dtype.itemsize), dtype=dtype)
            arr = data.reshape(entry["shape"]).astype(_DTYPES[entry["dtype"]])
            params[entry["name"]] = Tensor(arr, requires_grad=True)
    return params, header["meta"]
