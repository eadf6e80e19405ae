"""Checkpoint persistence.

Layout: magic "CLMP", version byte, u32 JSON length + UTF-8 config block,
u32 tensor count, then per tensor (sorted by name): u16 name length, name,
u8 ndim, u32 per dimension, and the float32 little-endian data.
"""

from __future__ import annotations

import io
import json
import struct
from pathlib import Path

import numpy as np
import torch

MAGIC = b"CLMP"
FORMAT_VERSION = 1


def save_checkpoint(path: str | Path, config: dict, tensors: dict[str, torch.Tensor]) -> None:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<B", FORMAT_VERSION))
    blob = json.dumps(config, sort_keys=True).encode("utf-8")
    buf.write(struct.pack("<I", len(blob)))
    buf.write(blob)
    buf.write(struct.pack("<I", len(tensors)))
    for name in sorted(tensors):
        data = tensors[name].detach().cpu().to(torch.float32).numpy()
        encoded = name.encode("utf-8")
        buf.write(struct.pack("<H", len(encoded)))
        buf.write(encoded)
        buf.write(struct.pack("<B", data.ndim))
        for dim in data.shape:
            buf.write(struct.pack("<I", dim))
        buf.write(data.astype("<f4").tobytes(order="C"))
    Path(path).write_bytes(buf.getvalue())


def load_checkpoint(path: str | Path) -> tuple[dict, dict[str, torch.Tensor]]:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError(f"not a CLMP checkpoint: bad magic {data[:4]!r}")
    version = data[4]
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    offset = 5
    (json_len,) = struct.unpack_from("<I", data, offset)
    offset += 4
    config = json.loads(data[offset : offset + json_len].decode("utf-8"))
    offset += json_len
    (count,) = struct.unpack_from("<I", data, offset)
    offset += 4
    tensors: dict[str, torch.Tensor] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        name = data[offset : offset + name_len].decode("utf-8")
        offset += name_len
        ndim = data[offset]
        offset += 1
        shape = struct.unpack_from(f"<{ndim}I", data, offset)
        offset += 4 * ndim
        numel = int(np.prod(shape)) if ndim else 1
        array = np.frombuffer(data, dtype="<f4", count=numel, offset=offset).reshape(shape)
        offset += 4 * numel
        tensors[name] = torch.from_numpy(array.copy())
    return config, tensors
