"""Binary checkpoint: LSTM parameters plus Adam moments and step count.

Layout (little-endian)::

    "INVW" | u32 version=1 | u32 tensor count
    per tensor: u16 len + utf-8 name | u8 rank | rank x u32 dims | f64 data
    u64 adam step count

Tensors are the parameters followed by ``adam.m.<name>`` and
``adam.v.<name>`` for every parameter.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import BadMagic, BadVersion, FormatError, TruncatedFile
from .adam import AdamState
from .lstm import LstmStack

MAGIC = b"INVW"
VERSION = 1


def _tensor_bytes(name: str, a: np.ndarray) -> bytes:
    raw = name.encode("utf-8")
    head = struct.pack("<H", len(raw)) + raw + struct.pack("<B", a.ndim)
    head += struct.pack(f"<{a.ndim}I", *a.shape)
    return head + np.ascontiguousarray(a, dtype="<f8").tobytes()


def save_checkpoint(path, stack: LstmStack, adam: AdamState | None = None) -> None:
    if adam is None:
        adam = AdamState.for_params(stack.params)
    tensors = list(stack.params.items())
    tensors += [(f"adam.m.{k}", adam.m[k]) for k in stack.params]
    tensors += [(f"adam.v.{k}", adam.v[k]) for k in stack.params]
    parts = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    parts += [_tensor_bytes(k, a) for k, a in tensors]
    parts.append(struct.pack("<Q", adam.t))
    Path(path).write_bytes(b"".join(parts))


def load_checkpoint(path) -> tuple[LstmStack, AdamState]:
    data = Path(path).read_bytes()
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(data):
            raise TruncatedFile(f"{path}: file ends at byte {len(data)}, needed {pos + n}")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    if data[:4] != MAGIC:
        raise BadMagic(f"{path}: not a checkpoint (magic {data[:4]!r})")
    take(4)
    version, count = struct.unpack("<II", take(8))
    if version != VERSION:
        raise BadVersion(f"{path}: unsupported version {version}")
    tensors = {}
    for _ in range(count):
        (n,) = struct.unpack("<H", take(2))
        name = take(n).decode("utf-8")
        (rank,) = struct.unpack("<B", take(1))
        dims = struct.unpack(f"<{rank}I", take(4 * rank))
        size = int(np.prod(dims)) if rank else 1
        tensors[name] = np.frombuffer(take(8 * size), dtype="<f8").astype(np.float64).reshape(dims)
    (step,) = struct.unpack("<Q", take(8))
    if pos != len(data):
        raise FormatError(f"{path}: {len(data) - pos} trailing bytes")
    params = {k: a for k, a in tensors.items() if not k.startswith("adam.")}
    try:
        m = {k: tensors[f"adam.m.{k}"] for k in params}
        v = {k: tensors[f"adam.v.{k}"] for k in params}
    except KeyError as exc:
        raise FormatError(f"{path}: missing optimizer tensor {exc}") from None
    if "head.w" not in params:
        raise FormatError(f"{path}: missing head parameters")
    return LstmStack(params), AdamState(m, v, step)
