"""WAV reading and writing on top of :mod:`scipy.io.wavfile`.

Reads accept PCM 16-bit and IEEE float 32-bit. Writes are always 16-bit PCM
with hard clipping at +-1.0.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import BadWav

PCM16_SCALE = 32768.0


def read_wav(path) -> tuple[int, np.ndarray]:
    """Return ``(rate, samples)`` with samples as float64 in [-1, 1],
    shape ``(n,)`` for mono and ``(n, channels)`` otherwise."""
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise BadWav(f"{path}: file not found") from None
    except (ValueError, OSError, EOFError) as exc:
        raise BadWav(f"{path}: unreadable WAV ({exc})") from None
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / PCM16_SCALE
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise BadWav(f"{path}: unsupported sample format {data.dtype} (need PCM16 or float32)")
    return int(rate), samples


def to_pcm16(samples: np.ndarray) -> np.ndarray:
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    return np.clip(np.round(x * PCM16_SCALE), -32768, 32767).astype(np.int16)


def write_wav(path, samples: np.ndarray, rate: int = 44100) -> None:
    """Write mono ``(n,)`` or multichannel ``(n, channels)`` float samples."""
    wavfile.write(Path(path), rate, to_pcm16(samples))
