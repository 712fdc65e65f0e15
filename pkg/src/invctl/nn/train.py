"""Mini-batch training loop: forward, BPTT, Adam, per-epoch validation."""

from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..dataset import BATCH_SIZE, Dataset, batches
from ..physics import GESTURE_LIMIT
from ..rng import derive_seed
from .adam import AdamState, adam_step
from .lstm import LstmStack, backward, forward, init_params, mse_grad

log = logging.getLogger(__name__)

# gesture targets are trained in units of the gesture range
TARGET_SCALE = 1.0 / GESTURE_LIMIT


@dataclass
class TrainConfig:
    epochs: int = 64
    batch_size: int = BATCH_SIZE
    seed: int = 0
    layers: int = 2
    units: int = 64
    learning_rate: float = 1e-3
    threads: int = 1  # 1 = sequential, bit-reproducible

    def __post_init__(self):
        for name in ("epochs", "batch_size", "layers", "units", "threads"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    train_mse: float
    val_mse: float
    seconds: float


@dataclass
class TrainResult:
    stack: LstmStack  # parameters from the best validation epoch
    adam: AdamState  # optimizer state at that epoch
    best_epoch: int
    log: list[EpochLog] = field(default_factory=list)


def _batch_grads(stack: LstmStack, x: np.ndarray, y: np.ndarray, threads: int):
    """Loss sum and gradient of the batch-mean MSE."""
    count = y.size
    if threads == 1 or x.shape[0] == 1:
        pred, cache = forward(stack, x)
        grads = backward(stack, cache, mse_grad(pred, y, count))
        return float(np.sum((pred - y) ** 2)), grads

    def work(sl):
        pred, cache = forward(stack, x[sl])
        return float(np.sum((pred - y[sl]) ** 2)), backward(stack, cache, mse_grad(pred, y[sl], count))

    bounds = np.linspace(0, x.shape[0], min(threads, x.shape[0]) + 1).astype(int)
    chunks = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(work, chunks))
    total = sum(p[0] for p in parts)
    grads = {k: sum(p[1][k] for p in parts) for k in stack.params}
    return total, grads


def predict(stack: LstmStack, audio: np.ndarray, chunk: int = BATCH_SIZE) -> np.ndarray:
    """Gesture predictions in meters for a ``(n, T)`` block of audio segments."""
    audio = np.atleast_2d(np.asarray(audio, dtype=np.float64))
    out = np.empty_like(audio)
    for s in range(0, audio.shape[0], chunk):
        out[s:s + chunk] = forward(stack, audio[s:s + chunk])[0]
    return out / TARGET_SCALE


def split_mse(stack: LstmStack, d: Dataset, split: str, chunk: int = BATCH_SIZE) -> float:
    """MSE in training units over a whole split."""
    idx = d.split(split)
    pred = predict(stack, d.audio[idx], chunk) * TARGET_SCALE
    target = d.gesture[idx].astype(np.float64) * TARGET_SCALE
    return float(np.mean((pred - target) ** 2))


def train(d: Dataset, config: TrainConfig,
          on_epoch: Optional[Callable[[EpochLog], None]] = None) -> TrainResult:
    if d.train.size == 0 or d.val.size == 0:
        raise ValueError("dataset needs non-empty train and val splits")
    stack = init_params(config.layers, config.units, config.seed)
    adam = AdamState.for_params(stack.params, lr=config.learning_rate)
    best: Optional[TrainResult] = None
    history: list[EpochLog] = []
    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        sq_sum, n_values = 0.0, 0
        for batch in batches(d, "train", derive_seed(config.seed, epoch), config.batch_size):
            x = batch.audio.astype(np.float64)
            y = batch.gesture.astype(np.float64) * TARGET_SCALE
            loss_sum, grads = _batch_grads(stack, x, y, config.threads)
            adam_step(stack.params, grads, adam)
            sq_sum += loss_sum
            n_values += y.size
        val = split_mse(stack, d, "val", config.batch_size)
        entry = EpochLog(epoch, sq_sum / n_values, val, time.perf_counter() - t0)
        history.append(entry)
        log.info("epoch %d train %.6f val %.6f (%.1fs)", epoch, entry.train_mse, val, entry.seconds)
        if on_epoch is not None:
            on_epoch(entry)
        if best is None or val < best.log[-1].val_mse:
            best = TrainResult(stack.copy(), adam.copy(), epoch, [entry])
    best.log = history
    return best


LOG_HEADER = ("epoch", "train_mse", "val_mse", "seconds")


def write_log(entries: list[EpochLog], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LOG_HEADER)
        for e in entries:
            w.writerow([e.epoch, repr(e.train_mse), repr(e.val_mse), f"{e.seconds:.3f}"])
