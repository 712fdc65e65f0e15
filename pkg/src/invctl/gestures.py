"""Gesture corpora: seeded random gestures and imported recordings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import BadWav
from .physics import GESTURE_LIMIT, SAMPLE_RATE
from .rng import SplitMix64
from .wavio import read_wav

DEFAULT_SECONDS = 360.0


@dataclass(frozen=True)
class GestureSpec:
    duration: float  # s
    seed: int = 0
    smoothness_cutoff: float = 8.0  # Hz

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not 0 < self.smoothness_cutoff < SAMPLE_RATE / 4:
            raise ValueError("smoothness_cutoff out of range")


def random_gesture(spec: GestureSpec) -> np.ndarray:
    """Band-limited random hand motion at 44100 Hz, in meters.

    Gaussian white noise from SplitMix64 goes through a 4th-order Butterworth
    low-pass with its corner at half the smoothness cutoff (this keeps more
    than 99% of the energy below the cutoff itself), is scaled so the 99th
    percentile of ``|x|`` lands on 0.05 m, then clamped to +-0.05 m.
    """
    n = int(round(spec.duration * SAMPLE_RATE))
    warmup = int(round(2.0 * SAMPLE_RATE / spec.smoothness_cutoff))
    rng = SplitMix64(spec.seed)
    noise = rng.normal(n + warmup)
    sos = signal.butter(4, 0.5 * spec.smoothness_cutoff, fs=SAMPLE_RATE, output="sos")
    x = signal.sosfilt(sos, noise)[warmup:]
    q = np.percentile(np.abs(x), 99.0)
    if q > 0:
        x = x * (GESTURE_LIMIT / q)
    return np.clip(x, -GESTURE_LIMIT, GESTURE_LIMIT)


def import_gesture(wav_path) -> np.ndarray:
    """Load a mono 44100 Hz WAV; full scale +-1.0 maps to +-0.05 m."""
    rate, samples = read_wav(wav_path)
    if samples.ndim != 1:
        raise BadWav(f"{wav_path}: expected mono, got {samples.shape[1]} channels")
    if rate != SAMPLE_RATE:
        raise BadWav(f"{wav_path}: expected {SAMPLE_RATE} Hz, got {rate} Hz")
    return np.clip(samples * GESTURE_LIMIT, -GESTURE_LIMIT, GESTURE_LIMIT)


def gesture_to_wav_scale(gesture: np.ndarray) -> np.ndarray:
    """Meters -> WAV full scale (inverse of the import mapping)."""
    return np.asarray(gesture, dtype=np.float64) / GESTURE_LIMIT
