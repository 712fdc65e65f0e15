"""Aligned (audio, gesture) segment datasets at 2756.25 Hz.

Segments are non-overlapping 1024-sample windows kept in temporal order.
The train/val/test assignment is a SplitMix64 shuffle of the segment indices
keyed by the dataset seed, so the file only needs to store the seed.

File layout (little-endian)::

    "INVC" | u32 version=1 | u32 44100 | u32 16 | u32 1024 | u32 count
    | u64 seed | u16 len + utf-8 preset name | u32 n_train, n_val, n_test
    | count x (1024 f32 audio, 1024 f32 gesture in meters)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

from . import physics
from .errors import BadMagic, BadVersion, FormatError, ShapeMismatch, TooShort, TruncatedFile
from .resample import FACTOR, INPUT_RATE, decimate
from .rng import SplitMix64

SEGMENT_LENGTH = 1024
BATCH_SIZE = 98
MAGIC = b"INVC"
VERSION = 1
SPLITS = ("train", "val", "test")

_HEADER = struct.Struct("<4sIIIIIQ")
_COUNTS = struct.Struct("<III")


class SegmentPair(NamedTuple):
    audio: np.ndarray
    gesture: np.ndarray


class Batch(NamedTuple):
    indices: np.ndarray
    audio: np.ndarray  # (b, 1024)
    gesture: np.ndarray  # (b, 1024), meters

    def __len__(self):
        return len(self.indices)


@dataclass(eq=False)
class Dataset:
    audio: np.ndarray  # (n, 1024) float32
    gesture: np.ndarray  # (n, 1024) float32, meters
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    seed: int
    preset: str = ""
    factor: int = FACTOR

    def __len__(self):
        return self.audio.shape[0]

    def split(self, name: str) -> np.ndarray:
        if name not in SPLITS:
            raise ValueError(f"unknown split {name!r}")
        return getattr(self, name)

    def pair(self, index: int) -> SegmentPair:
        return SegmentPair(self.audio[index], self.gesture[index])

    def equals(self, other: "Dataset") -> bool:
        """Bit-exact comparison of contents and metadata."""
        return (
            self.seed == other.seed
            and self.preset == other.preset
            and self.factor == other.factor
            and self.audio.dtype == other.audio.dtype
            and self.audio.tobytes() == other.audio.tobytes()
            and self.gesture.tobytes() == other.gesture.tobytes()
            and all(np.array_equal(self.split(s), other.split(s)) for s in SPLITS)
        )


def split_counts(n_segments: int) -> tuple[int, int, int]:
    """80/10/10 with val and test each ``round(n / 10)``, halves rounded up."""
    n_hold = (n_segments + 5) // 10
    return n_segments - 2 * n_hold, n_hold, n_hold


def assign_splits(n_segments: int, seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n_train, n_val, n_test = split_counts(n_segments)
    if min(n_train, n_val, n_test) < 1:
        raise TooShort(f"{n_segments} segments is too few for non-empty train/val/test splits")
    perm = SplitMix64(seed).permutation(n_segments)
    train = np.sort(perm[:n_train])
    val = np.sort(perm[n_train:n_train + n_val])
    test = np.sort(perm[n_train + n_val:])
    return train, val, test


def segment_and_split(audio: np.ndarray, gesture: np.ndarray, seed: int,
                      preset: str = "") -> Dataset:
    """Cut decimated signals into 1024-sample windows and split them."""
    audio = np.asarray(audio)
    gesture = np.asarray(gesture)
    if audio.shape != gesture.shape or audio.ndim != 1:
        raise ShapeMismatch(f"audio {audio.shape} and gesture {gesture.shape} must be equal-length 1-D")
    n = audio.size // SEGMENT_LENGTH
    train, val, test = assign_splits(n, seed)
    used = n * SEGMENT_LENGTH
    return Dataset(
        audio=audio[:used].astype(np.float32).reshape(n, SEGMENT_LENGTH),
        gesture=gesture[:used].astype(np.float32).reshape(n, SEGMENT_LENGTH),
        train=train, val=val, test=test, seed=int(seed), preset=preset,
    )


def build_dataset(preset: str, gesture: np.ndarray, seed: int = 0) -> Dataset:
    """Render a full-rate gesture through a fresh preset, decimate both
    channels, then segment and split."""
    graph = physics.build_preset(preset)
    audio = physics.render(graph, gesture)
    clamped = np.clip(gesture, -physics.GESTURE_LIMIT, physics.GESTURE_LIMIT)
    return segment_and_split(decimate(audio), decimate(clamped), seed, preset)


def batches(d: Dataset, split: str, epoch_seed: int,
            batch_size: int = BATCH_SIZE) -> Iterator[Batch]:
    """One epoch over ``split`` in an order reshuffled from ``epoch_seed``."""
    idx = d.split(split)
    if idx.size == 0:
        raise ValueError(f"split {split!r} is empty")
    order = idx[SplitMix64(epoch_seed).permutation(idx.size)]
    for start in range(0, order.size, batch_size):
        sel = order[start:start + batch_size]
        yield Batch(sel, d.audio[sel], d.gesture[sel])


def save_dataset(d: Dataset, path) -> None:
    name = d.preset.encode("utf-8")
    parts = [
        _HEADER.pack(MAGIC, VERSION, INPUT_RATE, d.factor, SEGMENT_LENGTH, len(d), d.seed),
        struct.pack("<H", len(name)), name,
        _COUNTS.pack(d.train.size, d.val.size, d.test.size),
    ]
    seg = np.empty((len(d), 2, SEGMENT_LENGTH), dtype="<f4")
    seg[:, 0] = d.audio
    seg[:, 1] = d.gesture
    parts.append(seg.tobytes())
    Path(path).write_bytes(b"".join(parts))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFile(f"file ends at byte {len(self.data)}, needed {self.pos + n}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: struct.Struct | str):
        fmt = struct.Struct(fmt) if isinstance(fmt, str) else fmt
        return fmt.unpack(self.take(fmt.size))


def load_dataset(path) -> Dataset:
    r = _Reader(Path(path).read_bytes())
    if r.data[:4] != MAGIC:
        raise BadMagic(f"{path}: not a dataset file (magic {r.data[:4]!r})")
    magic, version, rate, factor, seg_len, count, seed = r.unpack(_HEADER)
    if version != VERSION:
        raise BadVersion(f"{path}: unsupported version {version}")
    if (rate, factor, seg_len) != (INPUT_RATE, FACTOR, SEGMENT_LENGTH):
        raise FormatError(f"{path}: unsupported layout rate={rate}/{factor} segment={seg_len}")
    (name_len,) = r.unpack("<H")
    preset = r.take(name_len).decode("utf-8")
    counts = r.unpack(_COUNTS)
    raw = np.frombuffer(r.take(count * 2 * SEGMENT_LENGTH * 4), dtype="<f4")
    if r.pos != len(r.data):
        raise FormatError(f"{path}: {len(r.data) - r.pos} trailing bytes")
    seg = raw.reshape(count, 2, SEGMENT_LENGTH).astype(np.float32)
    train, val, test = assign_splits(count, seed)
    if counts != (train.size, val.size, test.size):
        raise FormatError(f"{path}: split counts {counts} do not match the seed")
    return Dataset(
        audio=np.ascontiguousarray(seg[:, 0]), gesture=np.ascontiguousarray(seg[:, 1]),
        train=train, val=val, test=test, seed=seed, preset=preset, factor=factor,
    )
