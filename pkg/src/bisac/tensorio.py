"""File formats used across the workbench.

Binary tensor container (``.nts``)
----------------------------------
Little-endian throughout::

    magic   : 4 bytes  b"NTS1"
    version : u32      (currently 1)
    dtype   : u8       0=float32 1=float64 2=complex64 3=complex128
    rank    : u8
    pad     : u16      (zero)
    dims    : rank * u64
    data    : raw array bytes, C order; complex stored as interleaved
              (real, imag) little-endian floats

Sidecar metadata (``.meta``) and manifests are flat key/value text with
``[section]`` headers (INI grammar, ``=`` separated, ``#`` comments).  Values
are written with ``repr`` so floats round-trip exactly.
"""

from __future__ import annotations

import configparser
import struct
from pathlib import Path

import numpy as np

MAGIC = b"NTS1"
VERSION = 1

_DTYPE_CODES = {
    np.dtype(np.float32): 0,
    np.dtype(np.float64): 1,
    np.dtype(np.complex64): 2,
    np.dtype(np.complex128): 3,
}
_CODE_DTYPES = {v: k for k, v in _DTYPE_CODES.items()}


class TensorFormatError(ValueError):
    pass


def write_tensor(path: str | Path, array: np.ndarray) -> None:
    arr = np.ascontiguousarray(array)
    if arr.dtype not in _DTYPE_CODES:
        if np.iscomplexobj(arr):
            arr = arr.astype(np.complex128)
        else:
            arr = arr.astype(np.float64)
    code = _DTYPE_CODES[arr.dtype]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IBBH", VERSION, code, arr.ndim, 0))
        fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        fh.write(arr.astype(arr.dtype.newbyteorder("<")).tobytes(order="C"))


def read_tensor(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise TensorFormatError(f"{path}: bad magic {magic!r}")
        version, code, rank, _pad = struct.unpack("<IBBH", fh.read(8))
        if version != VERSION:
            raise TensorFormatError(f"{path}: unsupported version {version}")
        if code not in _CODE_DTYPES:
            raise TensorFormatError(f"{path}: unknown dtype code {code}")
        dims = struct.unpack(f"<{rank}Q", fh.read(8 * rank))
        dtype = _CODE_DTYPES[code].newbyteorder("<")
        count = int(np.prod(dims)) if rank else 1
        data = np.frombuffer(fh.read(count * dtype.itemsize), dtype=dtype, count=count)
    return data.reshape(dims).astype(_CODE_DTYPES[code])


# ---------------------------------------------------------------------------
# key/value text records (sidecars, manifests, configs share one grammar)

def new_record() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keys are case-sensitive
    return cp


def write_record(path: str | Path, record: configparser.ConfigParser) -> None:
    with open(path, "w") as fh:
        record.write(fh)


def read_record(path: str | Path) -> configparser.ConfigParser:
    cp = new_record()
    with open(path) as fh:
        cp.read_file(fh)
    return cp


def fmt(value) -> str:
    """Round-trip-exact text for numbers; plain str otherwise."""
    if isinstance(value, float):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, np.floating):
        return repr(float(value))
    return str(value)


# ---------------------------------------------------------------------------
# signals: tensor + sidecar with the sample rate

def write_signal(path: str | Path, samples: np.ndarray, sample_rate_hz: float) -> None:
    path = Path(path)
    write_tensor(path, np.asarray(samples, dtype=np.complex128))
    rec = new_record()
    rec.add_section("signal")
    rec.set("signal", "sample_rate_hz", fmt(float(sample_rate_hz)))
    rec.set("signal", "shape", " ".join(str(d) for d in np.asarray(samples).shape))
    write_record(path.with_suffix(path.suffix + ".meta"), rec)


def read_signal(path: str | Path) -> tuple[np.ndarray, float]:
    path = Path(path)
    data = read_tensor(path)
    meta = read_record(path.with_suffix(path.suffix + ".meta"))
    return data, float(meta.get("signal", "sample_rate_hz"))


# ---------------------------------------------------------------------------
# CSV tables (documented column order, deterministic formatting)

def write_csv(path: str | Path, header: list[str], rows: list[tuple]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]
