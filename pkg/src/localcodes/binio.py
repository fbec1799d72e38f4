"""Framed binary container: magic, version, JSON header, raw array sections.

Layout:
    magic (4 bytes) | version (u16 LE) | header_len (u32 LE) | header JSON |
    concatenated array payloads (little-endian, C order)

The header records each array's name, dtype, shape and byte length, in
payload order, plus arbitrary metadata under "meta".
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DataError

_HEADER_STRUCT_BYTES = 4 + 2 + 4


def write_container(path, magic: bytes, version: int, meta: dict,
                    arrays: dict[str, np.ndarray]) -> None:
    if len(magic) != 4:
        raise ValueError("magic must be 4 bytes")
    sections = []
    payloads = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        data = arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes()
        sections.append({
            "name": name,
            "dtype": arr.dtype.str.replace(">", "<"),
            "shape": list(arr.shape),
            "nbytes": len(data),
        })
        payloads.append(data)
    header = json.dumps({"meta": meta, "sections": sections}).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(int(version).to_bytes(2, "little"))
        fh.write(len(header).to_bytes(4, "little"))
        fh.write(header)
        for data in payloads:
            fh.write(data)


def read_container(path, expect_magic: bytes) -> tuple[int, dict, dict[str, np.ndarray]]:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER_STRUCT_BYTES:
        raise DataError(f"{path}: truncated file")
    if raw[:4] != expect_magic:
        raise DataError(f"{path}: bad magic {raw[:4]!r}, expected {expect_magic!r}")
    version = int.from_bytes(raw[4:6], "little")
    header_len = int.from_bytes(raw[6:10], "little")
    try:
        header = json.loads(raw[10:10 + header_len].decode("utf-8"))
        sections = header["sections"]
        meta = header["meta"]
    except (ValueError, KeyError) as exc:
        raise DataError(f"{path}: malformed header: {exc}") from exc
    arrays = {}
    offset = 10 + header_len
    for sec in sections:
        nbytes = sec["nbytes"]
        chunk = raw[offset:offset + nbytes]
        if len(chunk) != nbytes:
            raise DataError(f"{path}: truncated section {sec['name']!r}")
        arrays[sec["name"]] = np.frombuffer(
            chunk, dtype=np.dtype(sec["dtype"])
        ).reshape(sec["shape"]).copy()
        offset += nbytes
    return version, meta, arrays
