"""16:1 decimation (44100 -> 2756.25 Hz) and the matching 1:16 interpolator.

Both use the same linear-phase windowed-sinc FIR: 255 taps, Kaiser window
sized for 45 dB stopband starting at the output Nyquist frequency
(1378.125 Hz), with each polyphase branch normalized to unity DC gain.
The filter delay is exactly 127 input samples and is removed, so output
sample ``k`` of :func:`decimate` is centered on input sample ``16 k``.
"""

from __future__ import annotations

import numpy as np
from scipy import signal

from .errors import EmptyInput, TooShort

FACTOR = 16
INPUT_RATE = 44100
OUTPUT_RATE = INPUT_RATE / FACTOR  # 2756.25 Hz
NUM_TAPS = 255
DELAY = (NUM_TAPS - 1) // 2
STOPBAND_DB = 45.0


def _design() -> np.ndarray:
    nyquist_out = OUTPUT_RATE / 2
    # Kaiser's estimate of the transition width for NUM_TAPS taps
    width = (STOPBAND_DB - 7.95) / (2.285 * (NUM_TAPS - 1)) / np.pi * (INPUT_RATE / 2)
    cutoff = nyquist_out - width / 2
    beta = signal.kaiser_beta(STOPBAND_DB)
    h = signal.firwin(NUM_TAPS, cutoff, window=("kaiser", beta), fs=INPUT_RATE)
    # every polyphase branch sums to 1/FACTOR: exact nulls at multiples of the
    # output rate, so interpolating a constant gives a constant. Branch p and
    # its mirror (NUM_TAPS - 1 - p) share a sum, so symmetry is kept.
    for p in range(FACTOR):
        h[p::FACTOR] *= (1.0 / FACTOR) / h[p::FACTOR].sum()
    return h


TAPS = _design()
TAPS.setflags(write=False)


def _check_factor(factor: int) -> None:
    if factor != FACTOR:
        raise ValueError(f"only factor {FACTOR} is supported")


def decimate(x: np.ndarray, factor: int = FACTOR) -> np.ndarray:
    """Low-pass then keep every 16th sample; output length ``len(x) // 16``."""
    _check_factor(factor)
    x = np.asarray(x, dtype=np.float64)
    if x.size < NUM_TAPS:
        raise TooShort(f"signal has {x.size} samples, need at least {NUM_TAPS}")
    n_out = x.size // FACTOR
    # pad the front so the filter centre lands on multiples of FACTOR
    lead = (-DELAY) % FACTOR
    y = signal.upfirdn(TAPS, np.concatenate([np.zeros(lead), x]), up=1, down=FACTOR)
    skip = (DELAY + lead) // FACTOR
    return y[skip:skip + n_out]


def upsample(x: np.ndarray, factor: int = FACTOR) -> np.ndarray:
    """Zero-stuff by 16 and low-pass with gain 16; output length ``16 len(x)``."""
    _check_factor(factor)
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise EmptyInput("cannot upsample an empty signal")
    y = signal.upfirdn(TAPS * FACTOR, x, up=FACTOR, down=1)
    out = np.zeros(x.size * FACTOR)
    avail = y[DELAY:DELAY + out.size]
    out[:avail.size] = avail
    return out
