"""Command line entry point.

Five subcommands cover the workflow end to end:

  simulate  draw scenes, synthesize the radar matrices, save a corpus
  augment   rotation-expand a saved corpus
  train     fit the recovery network on a corpus, save a checkpoint
  infer     run a checkpoint over a corpus, write recovered waveforms
  eval      score a checkpoint against a corpus plus both baselines

Exit codes: 0 success, 1 bad usage, 2 runtime failure. All commands are
deterministic for a fixed --seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import torch

from ..model import (
    NetworkConfig,
    TrainConfig,
    TrainingDiverged,
    TwoStreamRecoveryNet,
    infer_batch,
    load_checkpoint,
    save_checkpoint,
    stack_windows,
    train,
)
from ..pipeline import extract_window, rotate_matrix
from ..sim import (
    MOTION_KINDS,
    Dataset,
    RadarConfig,
    Record,
    load_corpus,
    make_dataset,
    save_corpus,
)
from .experiment import augment_pairs, evaluate_windows, locate_subject, sample_scenes


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    p = _Parser(prog="resprad", description=__doc__.strip().splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="synthesize a corpus")
    sim.add_argument("--out", required=True, help="corpus directory to create")
    sim.add_argument(
        "--kinds",
        default="static",
        help=f"comma-separated motion kinds from {', '.join(MOTION_KINDS)}",
    )
    sim.add_argument("--scenes-per-kind", type=int, default=2)
    sim.add_argument("--duration", type=float, default=20.0, help="scene length [s]")
    sim.add_argument("--window", type=float, default=20.0, help="record window [s]")
    sim.add_argument("--frame-rate", type=float, default=50.0)
    sim.add_argument("--bins", type=int, default=48, help="fast-time bins")
    sim.add_argument("--noise-std", type=float, default=0.45)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument(
        "--stage",
        type=int,
        default=0,
        help="scene draw stage; different stages never share scenes",
    )

    aug = sub.add_parser("augment", help="rotation-expand a corpus")
    aug.add_argument("--corpus", required=True)
    aug.add_argument("--out", required=True)
    aug.add_argument("--count", type=int, default=8, help="rotations per record")

    tr = sub.add_parser("train", help="train the recovery network")
    tr.add_argument("--corpus", required=True)
    tr.add_argument("--out", required=True, help="checkpoint directory to create")
    tr.add_argument("--epochs", type=int, default=30)
    tr.add_argument("--batch-size", type=int, default=64)
    tr.add_argument("--lr", type=float, default=0.01)
    tr.add_argument("--momentum", type=float, default=0.9)
    tr.add_argument("--gamma", type=float, default=3.0, help="regularizer weight")
    tr.add_argument("--eta", type=float, default=2e-4, help="alignment weight")
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--half-width", type=int, default=1, help="bins kept each side")
    tr.add_argument("--augment", type=int, default=1, help="rotations per window")
    tr.add_argument("--latent", type=int, default=16)
    tr.add_argument(
        "--channels",
        default="8,16,32,64,128",
        help="encoder channels per stage; decoder mirrors them",
    )

    inf = sub.add_parser("infer", help="recover waveforms from a corpus")
    inf.add_argument("--checkpoint", required=True)
    inf.add_argument("--corpus", required=True)
    inf.add_argument("--out", required=True, help="CSV file to write")
    inf.add_argument("--index", type=int, default=None, help="single record index")

    ev = sub.add_parser("eval", help="score a checkpoint plus both baselines")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--corpus", required=True)
    ev.add_argument("--out", required=True, help="JSON report to write")

    return p


def _cmd_simulate(args) -> str:
    kinds = tuple(k.strip() for k in args.kinds.split(",") if k.strip())
    radar = RadarConfig(
        frame_rate=args.frame_rate,
        fast_time_bins=args.bins,
        noise_std=args.noise_std,
    )
    scenes = sample_scenes(
        kinds, args.scenes_per_kind, args.seed, args.duration, radar, stage=args.stage
    )
    ds = make_dataset([s for _, s in scenes], radar, window_s=args.window)
    save_corpus(ds, args.out)
    return f"wrote {len(ds)} records to {args.out}"


def _cmd_augment(args) -> str:
    if args.count < 1:
        raise ValueError("--count must be >= 1")
    ds = load_corpus(args.corpus)
    out = Dataset(frame_rate=ds.frame_rate, bin_spacing=ds.bin_spacing, window_s=ds.window_s)
    step = 2.0 * np.pi / args.count
    for rec in ds:
        for j in range(args.count):
            meta = dict(rec.meta)
            meta["rotation_index"] = j
            meta["rotation_radians"] = j * step
            out.records.append(
                Record(
                    matrix=rotate_matrix(rec.matrix, j * step),
                    truth=rec.truth,
                    meta=meta,
                )
            )
    save_corpus(out, args.out)
    return f"wrote {len(out)} records ({args.count} rotations each) to {args.out}"


def _windows_from_corpus(ds: Dataset, half_width: int):
    """Locate the subject in every record and cut the network windows."""
    pairs, metas = [], []
    for rec in ds:
        center, hits = locate_subject(rec.matrix)
        center = int(np.clip(center, half_width, rec.matrix.n_bins - 1 - half_width))
        pairs.append((extract_window(rec.matrix, center, half_width), rec.truth))
        metas.append(
            {
                "kind": rec.meta.get("motion_kind", "unknown"),
                "rate_hz": rec.meta["respiration"]["rate_hz"],
                "located_bin": center,
                "true_bin": rec.meta.get("subject_bin", center),
                "cfar_hit": len(hits) > 0,
            }
        )
    return pairs, metas


def _cmd_train(args) -> str:
    torch.set_num_threads(1)
    ds = load_corpus(args.corpus)
    if len(ds) == 0:
        raise ValueError(f"corpus {args.corpus} is empty")
    pairs, _ = _windows_from_corpus(ds, args.half_width)
    pairs = augment_pairs(pairs, args.augment)

    channels = tuple(int(c) for c in args.channels.split(","))
    net_cfg = NetworkConfig(
        input_channels=2 * args.half_width + 1,
        frames=pairs[0][0].n_frames,
        encoder_channels=channels,
        decoder_channels=tuple(reversed(channels)),
        latent_dim=args.latent,
    )
    train_cfg = TrainConfig(
        gamma=args.gamma,
        eta=args.eta,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        momentum=args.momentum,
        epochs=args.epochs,
        rng_seed=args.seed,
    )
    net = TwoStreamRecoveryNet(net_cfg, init_seed=args.seed)
    history = train(stack_windows(pairs), net, train_cfg)
    save_checkpoint(args.out, net, train_cfg, history)
    final = history.epochs[-1].total if len(history) else float("nan")
    return (
        f"trained {train_cfg.epochs} epochs on {len(pairs)} windows, "
        f"final loss {final:.4f}, checkpoint at {args.out}"
    )


def _cmd_infer(args) -> str:
    torch.set_num_threads(1)
    net, _ = load_checkpoint(args.checkpoint)
    ds = load_corpus(args.corpus)
    half_width = (net.cfg.input_channels - 1) // 2
    records = list(range(len(ds)))
    if args.index is not None:
        if not 0 <= args.index < len(ds):
            raise ValueError(f"--index {args.index} out of range for {len(ds)} records")
        records = [args.index]
    pairs, _ = _windows_from_corpus(
        Dataset(
            records=[ds[k] for k in records],
            frame_rate=ds.frame_rate,
            bin_spacing=ds.bin_spacing,
            window_s=ds.window_s,
        ),
        half_width,
    )
    i_arr, q_arr, _ = stack_windows(pairs)
    preds = infer_batch(i_arr, q_arr, net)

    lines = ["record,frame,waveform"]
    for row, rec_idx in enumerate(records):
        for f, v in enumerate(preds[row]):
            lines.append(f"{rec_idx},{f},{float(v)!r}")
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text("\n".join(lines) + "\n")
    return f"wrote {len(records)} waveforms to {args.out}"


def _cmd_eval(args) -> str:
    torch.set_num_threads(1)
    net, _ = load_checkpoint(args.checkpoint)
    ds = load_corpus(args.corpus)
    half_width = (net.cfg.input_channels - 1) // 2
    pairs, metas = _windows_from_corpus(ds, half_width)

    kinds = sorted({m["kind"] for m in metas})
    results = {}
    for kind in kinds:
        sel = [k for k, m in enumerate(metas) if m["kind"] == kind]
        sets = evaluate_windows(
            [pairs[k] for k in sel], [metas[k] for k in sel], net, ds.frame_rate
        )
        results[kind] = {m: s.as_dict() for m, s in sets.items()}
        results[kind]["n_windows"] = len(sel)

    report = {"corpus": str(args.corpus), "checkpoint": str(args.checkpoint), "results": results}
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    net_cos = [results[k]["net"]["mean_cosine"] for k in kinds]
    return f"wrote {args.out}; mean cosine per kind: " + ", ".join(
        f"{k}={c:.3f}" for k, c in zip(kinds, net_cos)
    )


_COMMANDS = {
    "simulate": _cmd_simulate,
    "augment": _cmd_augment,
    "train": _cmd_train,
    "infer": _cmd_infer,
    "eval": _cmd_eval,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        message = _COMMANDS[args.command](args)
    except (ValueError, KeyError, OSError, TrainingDiverged) as exc:
        print(f"resprad {args.command}: error: {exc}", file=sys.stderr)
        return 2
    print(message)
    return 0


if __name__ == "__main__":
    sys.exit(main())
