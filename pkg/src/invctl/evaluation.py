"""Inversion quality: normalized absolute error, resynthesis, comparison files."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import physics
from .dataset import Dataset
from .errors import IndexOutOfRange, ShapeMismatch, ZeroDenominator
from .gestures import gesture_to_wav_scale
from .nn.lstm import LstmStack
from .nn.train import predict
from .resample import FACTOR, upsample
from .wavio import write_wav


def normalized_absolute_error(targets: np.ndarray, predictions: np.ndarray) -> float:
    """``mean|Y - Yhat| / mean|Yhat|``; the prediction is the normalizer."""
    y = np.asarray(targets, dtype=np.float64).ravel()
    p = np.asarray(predictions, dtype=np.float64).ravel()
    if y.shape != p.shape:
        raise ShapeMismatch(f"targets {y.shape} vs predictions {p.shape}")
    if y.size == 0:
        raise ValueError("need at least one sample")
    denom = np.mean(np.abs(p))
    if denom == 0.0:
        raise ZeroDenominator("all predictions are zero")
    return float(np.mean(np.abs(y - p)) / denom)


def target_normalized_error(targets: np.ndarray, predictions: np.ndarray) -> float:
    """Same numerator, normalized by ``mean|Y|`` instead (reported alongside)."""
    return normalized_absolute_error(predictions, targets)


@dataclass
class EvalReport:
    preset: str
    split: str
    segments: np.ndarray  # dataset indices, ascending
    nae: np.ndarray  # nan where the denominator vanished
    nae_target_norm: np.ndarray
    mse: np.ndarray  # meters^2
    baseline_mse: np.ndarray  # constant train-mean predictor, meters^2
    zero_denominator: np.ndarray  # bool

    @property
    def mean_nae(self) -> float:
        ok = ~self.zero_denominator
        return float(np.mean(self.nae[ok])) if ok.any() else math.nan

    @property
    def n_evaluated(self) -> int:
        return int((~self.zero_denominator).sum())

    @property
    def n_zero_denominator(self) -> int:
        return int(self.zero_denominator.sum())

    @property
    def mean_mse(self) -> float:
        return float(np.mean(self.mse))

    @property
    def mean_baseline_mse(self) -> float:
        return float(np.mean(self.baseline_mse))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["segment", "nae", "nae_target_norm", "mse", "baseline_mse", "zero_denominator"])
            for row in zip(self.segments, self.nae, self.nae_target_norm, self.mse,
                           self.baseline_mse, self.zero_denominator):
                seg, nae, tn, mse, base, zd = row
                w.writerow([int(seg), repr(float(nae)), repr(float(tn)), repr(float(mse)),
                            repr(float(base)), int(zd)])
            finite = np.isfinite(self.nae_target_norm)
            tn_mean = float(np.mean(self.nae_target_norm[finite])) if finite.any() else math.nan
            w.writerow(["mean", repr(self.mean_nae), repr(tn_mean), repr(self.mean_mse),
                        repr(self.mean_baseline_mse), self.n_zero_denominator])


def evaluate_predictions(d: Dataset, split: str, predictions: np.ndarray) -> EvalReport:
    """Score meters-scale predictions for every segment of ``split``."""
    idx = d.split(split)
    if idx.size == 0:
        raise ValueError(f"split {split!r} is empty")
    targets = d.gesture[idx].astype(np.float64)
    predictions = np.asarray(predictions, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise ShapeMismatch(f"predictions {predictions.shape} vs targets {targets.shape}")
    mean_level = float(np.mean(d.gesture[d.train].astype(np.float64)))
    n = idx.size
    nae = np.full(n, np.nan)
    tn = np.full(n, np.nan)
    zero = np.zeros(n, dtype=bool)
    for j in range(n):
        try:
            nae[j] = normalized_absolute_error(targets[j], predictions[j])
        except ZeroDenominator:
            zero[j] = True
        try:
            tn[j] = target_normalized_error(targets[j], predictions[j])
        except ZeroDenominator:
            pass
    return EvalReport(
        preset=d.preset, split=split, segments=idx.copy(), nae=nae, nae_target_norm=tn,
        mse=np.mean((predictions - targets) ** 2, axis=1),
        baseline_mse=np.mean((mean_level - targets) ** 2, axis=1),
        zero_denominator=zero,
    )


def evaluate(stack: LstmStack, d: Dataset, split: str = "test") -> EvalReport:
    idx = d.split(split)
    if idx.size == 0:
        raise ValueError(f"split {split!r} is empty")
    return evaluate_predictions(d, split, predict(stack, d.audio[idx]))


def render_gesture(preset: str, gesture: np.ndarray) -> np.ndarray:
    """Render a 44100 Hz gesture through a freshly built preset."""
    return physics.render(physics.build_preset(preset), gesture)


def resynthesize(stack: LstmStack, d: Dataset, index: int, preset: str | None = None,
                 split: str = "test") -> tuple[np.ndarray, np.ndarray]:
    """Predict the gesture for segment ``index`` of ``split`` and play it back.

    Returns ``(gesture, audio)`` at 44100 Hz, each ``16 * 1024`` samples; the
    gesture is in meters and clamped to the playable range.
    """
    idx = d.split(split)
    if not 0 <= index < idx.size:
        raise IndexOutOfRange(f"index {index} outside the {split} split (size {idx.size})")
    seg = idx[index]
    pred = predict(stack, d.audio[seg][None, :])[0]
    gesture = np.clip(upsample(pred, FACTOR), -physics.GESTURE_LIMIT, physics.GESTURE_LIMIT)
    return gesture, render_gesture(preset or d.preset, gesture)


def write_comparison_wavs(target_audio: np.ndarray, target_gesture: np.ndarray,
                          predicted_gesture: np.ndarray, resynth_audio: np.ndarray,
                          out_dir) -> dict[str, Path]:
    """Write the stereo comparison files and a (t, y, yhat) CSV.

    ``target_audio`` and ``target_gesture`` are decimated segments (they are
    upsampled here); ``predicted_gesture`` and ``resynth_audio`` are 44100 Hz.

    * ``gesture_vs_audio.wav``: L = predicted gesture (0.05 m = full scale),
      R = target audio
    * ``resynth_vs_target.wav``: L = resynthesized audio, R = target audio
    * ``gesture.csv``: time, target gesture and predicted gesture in meters
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    source = upsample(np.asarray(target_audio, dtype=np.float64), FACTOR)
    y_true = upsample(np.asarray(target_gesture, dtype=np.float64), FACTOR)
    y_hat = np.asarray(predicted_gesture, dtype=np.float64)
    resynth = np.asarray(resynth_audio, dtype=np.float64)
    if not (source.size == y_true.size == y_hat.size == resynth.size):
        raise ShapeMismatch("comparison signals must all be 16x the segment length")
    paths = {
        "gesture_vs_audio": out / "gesture_vs_audio.wav",
        "resynth_vs_target": out / "resynth_vs_target.wav",
        "gesture_csv": out / "gesture.csv",
    }
    write_wav(paths["gesture_vs_audio"], np.column_stack([gesture_to_wav_scale(y_hat), source]))
    write_wav(paths["resynth_vs_target"], np.column_stack([resynth, source]))
    t = np.arange(y_hat.size) / physics.SAMPLE_RATE
    with open(paths["gesture_csv"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "y", "y_hat"])
        for row in zip(t, y_true, y_hat):
            w.writerow([f"{row[0]:.8f}", repr(float(row[1])), repr(float(row[2]))])
    return paths


def rms_envelope_correlation(reference: np.ndarray, candidate: np.ndarray) -> float:
    """Pearson correlation of per-segment RMS levels across ``(n, T)`` blocks."""
    a = np.sqrt(np.mean(np.asarray(reference, dtype=np.float64) ** 2, axis=1))
    b = np.sqrt(np.mean(np.asarray(candidate, dtype=np.float64) ** 2, axis=1))
    return float(np.corrcoef(a, b)[0, 1])
