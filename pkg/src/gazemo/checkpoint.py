"""Binary tensor container ("GZMT") used for all checkpoints.

Layout: magic ``GZMT``, format version u32, tensor count u32, then per
tensor: name length u16 + UTF-8 name, rank u8, dims as u32, data as
little-endian float32. All integers little-endian. Round trips are
bit-exact for float32 payloads.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

MAGIC = b"GZMT"
VERSION = 1


def save_tensors(path: str | Path, tensors: dict[str, np.ndarray]) -> None:
    """Write named float arrays; non-float32 inputs are cast on write."""
    out = bytearray()
    out += MAGIC
    out += struct.pack("<II", VERSION, len(tensors))
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype="<f4")
        encoded = name.encode("utf-8")
        out += struct.pack("<H", len(encoded))
        out += encoded
        out += struct.pack("<B", arr.ndim)
        out += struct.pack(f"<{arr.ndim}I", *arr.shape)
        out += arr.tobytes()
    Path(path).write_bytes(bytes(out))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.buf):
            raise FormatError(f"truncated GZMT file while reading {what}", self.pos)
        chunk = self.buf[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def load_tensors(path: str | Path) -> dict[str, np.ndarray]:
    r = _Reader(Path(path).read_bytes())
    if r.take(4, "magic") != MAGIC:
        raise FormatError(f"bad magic in {path}: expected {MAGIC!r}", 0)
    (version,) = r.unpack("<I", "version")
    if version != VERSION:
        raise FormatError(f"unsupported GZMT version {version}", 4)
    (count,) = r.unpack("<I", "tensor count")
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = r.unpack("<H", "name length")
        name = r.take(name_len, "name").decode("utf-8")
        (rank,) = r.unpack("<B", "rank")
        dims = r.unpack(f"<{rank}I", "dims") if rank else ()
        n = int(np.prod(dims)) if dims else 1
        raw = r.take(4 * n, f"data of {name!r}")
        tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).copy()
    return tensors


def save_metadata(path: str | Path, meta: dict) -> None:
    """JSON sidecar next to a checkpoint (same stem, .json suffix)."""
    Path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_metadata(path: str | Path) -> dict:
    p = Path(path)
    try:
        return json.loads(p.read_text())
    except (json.JSONDecodeError, OSError) as e:
        raise FormatError(f"cannot read checkpoint metadata {p}: {e}") from e


def sidecar_path(ckpt_path: str | Path) -> Path:
    return Path(ckpt_path).with_suffix(".json")
