"""Binary tensor container used for kernels, datasets and network weights.

Layout: 4-byte magic ``PDON``, a little-endian u32 format version, a
little-endian u64 manifest length, the UTF-8 JSON manifest, then the raw
payload.  The manifest object holds ``arrays`` (a list of
{name, dtype, shape, byte_offset} entries, offsets relative to the payload
start) and a free-form ``meta`` block.  The only supported dtype is "f64",
meaning little-endian IEEE-754 doubles; files declaring any other dtype are
rejected, which keeps the format endian-unambiguous.  Round trips are
bit-exact.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["Container", "ContainerError", "write_container", "read_container"]

MAGIC = b"PDON"
VERSION = 1
_DTYPE_TAG = "f64"
_NP_DTYPE = np.dtype("<f8")


class ContainerError(ValueError):
    """Malformed container: bad magic, version, manifest or payload."""


@dataclass
class Container:
    arrays: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]


def write_container(path: str | Path, arrays: dict[str, np.ndarray],
                    meta: dict | None = None) -> None:
    entries = []
    chunks = []
    offset = 0
    for name, arr in arrays.items():
        buf = np.ascontiguousarray(arr, dtype=_NP_DTYPE).tobytes()
        entries.append({"name": name, "dtype": _DTYPE_TAG,
                        "shape": list(np.asarray(arr).shape),
                        "byte_offset": offset})
        chunks.append(buf)
        offset += len(buf)
    manifest = json.dumps({"arrays": entries, "meta": meta or {}},
                          sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<Q", len(manifest)))
        fh.write(manifest)
        for buf in chunks:
            fh.write(buf)


def read_container(path: str | Path) -> Container:
    raw = Path(path).read_bytes()
    if len(raw) < 16:
        raise ContainerError("file too short for a container header")
    if raw[:4] != MAGIC:
        raise ContainerError(f"bad magic {raw[:4]!r}")
    (version,) = struct.unpack("<I", raw[4:8])
    if version != VERSION:
        raise ContainerError(f"unsupported container version {version}")
    (mlen,) = struct.unpack("<Q", raw[8:16])
    if len(raw) < 16 + mlen:
        raise ContainerError("truncated manifest")
    try:
        manifest = json.loads(raw[16:16 + mlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ContainerError(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(manifest, dict) or "arrays" not in manifest:
        raise ContainerError("manifest missing the arrays list")

    payload = raw[16 + mlen:]
    entries = manifest["arrays"]
    total = 0
    spans = []
    for e in entries:
        if e.get("dtype") != _DTYPE_TAG:
            raise ContainerError(f"unsupported dtype {e.get('dtype')!r} "
                                 f"for array {e.get('name')!r}")
        shape = tuple(int(d) for d in e["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * 8 if shape else 8
        start = int(e["byte_offset"])
        spans.append((start, start + nbytes, e["name"], shape))
        total += nbytes
    spans_sorted = sorted(spans)
    cursor = 0
    for start, stop, name, _ in spans_sorted:
        if start != cursor:
            raise ContainerError(f"array {name!r} offset {start} leaves a gap "
                                 f"or overlap at {cursor}")
        cursor = stop
    if total != len(payload):
        raise ContainerError(
            f"payload length {len(payload)} does not match manifest total {total}")

    arrays = {}
    for start, stop, name, shape in spans:
        arrays[name] = np.frombuffer(payload[start:stop],
                                     dtype=_NP_DTYPE).reshape(shape).copy()
    return Container(arrays=arrays, meta=manifest.get("meta", {}))
