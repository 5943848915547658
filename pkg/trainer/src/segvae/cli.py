"""Train / predict entry points over the documented file formats."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .data import NormStats, read_record_file
from .model import ModelConfig
from .predict import predict_to_files
from .train import TrainConfig, TrainingDiverged, load_checkpoint, \
    save_checkpoint, train


def cmd_train(args) -> int:
    sensor, records = read_record_file(args.infile)
    records = [r for r in records if r.labels is not None]
    if not records:
        print("error: no labeled records in input", file=sys.stderr)
        return 1
    config = TrainConfig(
        model=ModelConfig(input_variant=args.variant, n_beams=sensor.n_beams),
        epochs=args.epochs, batch_size=args.batch_size,
        learning_rate=args.lr, seed=args.seed)
    stats = NormStats.load(args.norm_stats) if args.norm_stats and \
        Path(args.norm_stats).exists() else None
    try:
        result = train(records, sensor, config, stats)
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    save_checkpoint(args.out, result)
    if args.norm_stats and stats is None:
        result.stats.save(args.norm_stats)
    if args.curve:
        Path(args.curve).write_text(json.dumps(result.curve))
    print(f"trained {config.epochs} epochs on {len(records)} scans "
          f"-> {args.out} (final loss {result.curve[-1]['total']:.4f})")
    return 0


def cmd_predict(args) -> int:
    model, stats, blob = load_checkpoint(args.checkpoint)
    sensor, records = read_record_file(args.infile)
    if sensor.n_beams != model.config.n_beams:
        print(f"error: checkpoint expects {model.config.n_beams} beams, "
              f"input has {sensor.n_beams}", file=sys.stderr)
        return 1
    n_samples = args.samples or blob.get("samples_per_scan", 32)
    predict_to_files(model, records, sensor, stats, args.out,
                     args.uncertainty, n_samples=n_samples, seed=args.seed)
    print(f"{n_samples} samples per scan for {len(records)} scans -> {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="segvae", description="stochastic per-beam lidar segmenter")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train")
    p.add_argument("--in", dest="infile", required=True,
                   help="labeled record file (training split)")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--variant", default="ri", choices=["ri", "r", "p"],
                   help="input encoding: range+intensity, range, points")
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--norm-stats", help="normalization stats JSON "
                   "(loaded if present, else computed and written)")
    p.add_argument("--curve", help="write the per-epoch loss curve JSON")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True, help="prediction file (samples)")
    p.add_argument("--uncertainty", help="per-beam vote-entropy file")
    p.add_argument("--samples", type=int,
                   help="samples per scan (default: from checkpoint)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
