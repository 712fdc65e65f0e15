"""Command-line entry point: ``invctl <command> [options]``.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import physics
from .dataset import BATCH_SIZE, build_dataset, load_dataset, save_dataset
from .errors import InvctlError
from .evaluation import evaluate, resynthesize, write_comparison_wavs
from .gestures import GestureSpec, gesture_to_wav_scale, import_gesture, random_gesture
from .nn import TrainConfig, load_checkpoint, save_checkpoint, train, write_log
from .wavio import write_wav

log = logging.getLogger("invctl")


@dataclass
class RunConfig:
    preset: Optional[str] = None
    dataset_path: Optional[Path] = None
    checkpoint_path: Optional[Path] = None
    seed: int = 0
    epochs: int = 64
    batch_size: int = BATCH_SIZE
    layers: int = 2
    units: int = 64
    output_dir: Optional[Path] = None

    def require_file(self, path: Optional[Path], what: str) -> Path:
        if path is None or not Path(path).is_file():
            raise FileNotFoundError(f"{what} not found: {path}")
        return Path(path)

    def require_writable(self, path: Path) -> Path:
        parent = Path(path).resolve().parent
        if not parent.is_dir() or not os.access(parent, os.W_OK):
            raise PermissionError(f"cannot write to {parent}")
        return Path(path)


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def cmd_synth(args) -> int:
    cfg = RunConfig(preset=args.preset)
    cfg.require_writable(args.out)
    gesture = import_gesture(args.gesture)
    audio = physics.render(physics.build_preset(args.preset), gesture)
    write_wav(args.out, audio)
    print(f"wrote {len(audio)} samples to {args.out}")
    return 0


def cmd_gen_gestures(args) -> int:
    RunConfig().require_writable(args.out)
    g = random_gesture(GestureSpec(args.seconds, seed=args.seed, smoothness_cutoff=args.cutoff))
    write_wav(args.out, gesture_to_wav_scale(g))
    print(f"wrote {len(g) / physics.SAMPLE_RATE:g} s gesture to {args.out}")
    return 0


def cmd_build_dataset(args) -> int:
    cfg = RunConfig(preset=args.preset, dataset_path=args.out, seed=args.seed)
    cfg.require_writable(args.out)
    gesture = import_gesture(args.gesture)
    d = build_dataset(args.preset, gesture, seed=args.seed)
    save_dataset(d, args.out)
    print(f"{len(d)} segments: train {d.train.size}, val {d.val.size}, test {d.test.size}")
    return 0


def cmd_train(args) -> int:
    cfg = RunConfig(dataset_path=args.data, checkpoint_path=args.ckpt, seed=args.seed,
                    epochs=args.epochs, batch_size=args.batch, layers=args.layers,
                    units=args.units)
    cfg.require_file(cfg.dataset_path, "dataset")
    cfg.require_writable(args.ckpt)
    if args.log:
        cfg.require_writable(args.log)
    d = load_dataset(args.data)
    config = TrainConfig(epochs=args.epochs, batch_size=args.batch, seed=args.seed,
                         layers=args.layers, units=args.units, learning_rate=args.lr,
                         threads=args.threads)
    result = train(d, config, on_epoch=lambda e: print(
        f"epoch {e.epoch:3d}  train {e.train_mse:.6f}  val {e.val_mse:.6f}  {e.seconds:.1f}s",
        flush=True))
    save_checkpoint(args.ckpt, result.stack, result.adam)
    if args.log:
        write_log(result.log, args.log)
    print(f"best val epoch {result.best_epoch} (val mse {result.log[result.best_epoch - 1].val_mse:.6f})")
    return 0


def cmd_eval(args) -> int:
    cfg = RunConfig(dataset_path=args.data, checkpoint_path=args.ckpt)
    cfg.require_file(cfg.dataset_path, "dataset")
    cfg.require_file(cfg.checkpoint_path, "checkpoint")
    cfg.require_writable(args.report)
    d = load_dataset(args.data)
    stack, _ = load_checkpoint(args.ckpt)
    report = evaluate(stack, d, args.split)
    report.write_csv(args.report)
    print(f"{args.split}: mean NAE {report.mean_nae:.4f} over {report.n_evaluated} segments "
          f"({report.n_zero_denominator} with zero denominator); "
          f"mse {report.mean_mse:.3e} vs baseline {report.mean_baseline_mse:.3e}")
    return 0


def cmd_resynth(args) -> int:
    cfg = RunConfig(dataset_path=args.data, checkpoint_path=args.ckpt, output_dir=args.out)
    cfg.require_file(cfg.dataset_path, "dataset")
    cfg.require_file(cfg.checkpoint_path, "checkpoint")
    d = load_dataset(args.data)
    stack, _ = load_checkpoint(args.ckpt)
    preset = args.preset or d.preset
    gesture, audio = resynthesize(stack, d, args.index, preset, split=args.split)
    seg = d.split(args.split)[args.index]
    paths = write_comparison_wavs(d.audio[seg], d.gesture[seg], gesture, audio, args.out)
    for p in paths.values():
        print(f"wrote {p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="invctl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render a gesture WAV through a preset")
    p.add_argument("--preset", required=True, choices=physics.PRESETS)
    p.add_argument("--gesture", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("gen-gestures", help="write a seeded random gesture WAV")
    p.add_argument("--seconds", type=_positive_float, default=360.0)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--cutoff", type=_positive_float, default=8.0, help="smoothness cutoff, Hz")
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_gen_gestures)

    p = sub.add_parser("build-dataset", help="render, decimate, segment and split a corpus")
    p.add_argument("--preset", required=True, choices=physics.PRESETS)
    p.add_argument("--gesture", required=True, type=Path)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("train", help="train the LSTM on a dataset")
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--epochs", type=_positive_int, default=64)
    p.add_argument("--batch", type=_positive_int, default=BATCH_SIZE)
    p.add_argument("--layers", type=int, choices=(2, 3), default=2)
    p.add_argument("--units", type=_positive_int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--threads", type=_positive_int, default=1,
                   help="1 = sequential, bit-reproducible")
    p.add_argument("--ckpt", required=True, type=Path)
    p.add_argument("--log", type=Path)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="normalized absolute error report")
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--ckpt", required=True, type=Path)
    p.add_argument("--split", choices=("train", "val", "test"), default="test")
    p.add_argument("--report", required=True, type=Path)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("resynth", help="predict a gesture and play it back through a preset")
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--ckpt", required=True, type=Path)
    p.add_argument("--preset", choices=physics.PRESETS)
    p.add_argument("--split", choices=("train", "val", "test"), default="test")
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_resynth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InvctlError, OSError) as exc:
        print(f"invctl {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
