"""Command-line entry point for the whole pipeline.

Subcommands: synth, train-single, train-seq, eval-single, eval-seq,
sweep-n, sweep-hours, regions, predict, curve, saliency.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric error.
Every file-producing subcommand writes only under its --out directory.
"""

from __future__ import annotations

import argparse
import contextlib
import sys
from pathlib import Path

import numpy as np

from . import evaluation
from .dataset import (build_sequences, load_manifest, select_hour_slot,
                      split_sequence, split_single_image)
from .errors import DataError, NumericError
from .imageio import load_image, load_masks, resize_bilinear
from .saliency import block_variation_map, render_map
from .synth import SynthConfig, synth_generate
from .training import (TrainConfig, load_checkpoint, save_checkpoint,
                       train_sequence, train_single)

PROGRESS_HEADER = "epoch,mean_loss,elapsed_s"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def main() -> None:
    sys.exit(run(sys.argv[1:]))


def run(argv) -> int:
    """Parse argv, dispatch, and map failures to exit codes."""
    parser = _build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return 1
    try:
        args = parser.parse_args(argv)
        args.handler(args)
        return 0
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        return int(exc.code or 0)
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _parse_hours(text: str):
    """Parse "8-17" or "8,9,11" into a list of hours."""
    text = text.strip()
    if "-" in text and "," not in text:
        lo, hi = text.split("-", 1)
        hours = list(range(int(lo), int(hi) + 1))
    else:
        hours = [int(part) for part in text.split(",") if part.strip()]
    if not hours:
        raise ValueError(f"no hours in {text!r}")
    return hours


def _parse_ints(text: str):
    return [int(part) for part in text.split(",") if part.strip()]


def _model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--encoding", choices=["one-hot", "lde"], default="lde",
                   help="target label encoding")
    p.add_argument("--sigma", type=float, default=None,
                   help="LDE Gaussian width (default 3.5 single / 4.0 seq)")
    p.add_argument("--learning-rate", type=float, default=0.001)
    p.add_argument("--epochs", type=int, default=90)
    p.add_argument("--batch-size", type=int, default=None,
                   help="default 32 single / 8 sequence")
    p.add_argument("--n", type=int, default=3, help="sequence length")
    p.add_argument("--direction", choices=["uni", "bi"], default="uni")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input-size", type=int, default=64)
    p.add_argument("--lstm-hidden", type=int, default=128)
    p.add_argument("--max-train-records", type=int, default=None)
    p.add_argument("--max-train-sequences", type=int, default=None)
    p.add_argument("--target-train-rmse", type=float, default=None)


def _config(args, task: str) -> TrainConfig:
    return TrainConfig(
        task=task,
        encoding=args.encoding.replace("-", "_"),
        sigma=args.sigma,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        batch_size=args.batch_size,
        sequence_length=args.n,
        direction=args.direction,
        seed=args.seed,
        input_size=args.input_size,
        lstm_hidden=args.lstm_hidden,
        max_train_records=args.max_train_records,
        max_train_sequences=args.max_train_sequences,
        target_train_rmse=args.target_train_rmse,
    )


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _picks(records, hours, max_deviation_min):
    picks = []
    for hour in hours:
        picks.extend(select_hour_slot(records, hour, max_deviation_min))
    return picks


@contextlib.contextmanager
def _progress_file(path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(PROGRESS_HEADER + "\n")

        def sink(line: str) -> None:
            fh.write(line + "\n")
            fh.flush()

        yield sink


def _write_report(report, out: Path, stem: str) -> None:
    evaluation.write_report_json(report, out / f"{stem}.json")
    evaluation.write_per_camera_csv(report, out / f"{stem}_per_camera.csv")
    evaluation.write_samples_csv(report, out / f"{stem}_samples.csv")


def _cmd_synth(args) -> None:
    out = _out_dir(args)
    config = SynthConfig(
        num_cameras=args.num_cameras,
        days=args.days,
        slots=tuple(_parse_hours(args.slots)),
        image_size=args.image_size,
        noise_sd=args.noise_sd,
        seed=args.seed,
        amplitude=args.amplitude,
        base=args.base,
        diurnal_amp=args.diurnal_amp,
        sky_tracks_temp=args.sky_tracks_temp,
        ground_tracks_temp=args.ground_tracks_temp,
    )
    manifest = synth_generate(config, out)
    print(manifest)


def _cmd_train_single(args) -> None:
    out = _out_dir(args)
    records = load_manifest(args.manifest)
    if args.hour is not None:
        picks = select_hour_slot(records, args.hour, args.max_deviation_min)
        records = [p.record for p in picks]
    if args.fold is not None:
        records, _ = split_single_image(records, args.k, args.fold,
                                        args.seed)
    config = _config(args, "single")
    with _progress_file(out / "progress.csv") as sink:
        ckpt = train_single(config, records, progress=sink,
                            threads=args.threads)
    ckpt_path = out / "checkpoint.atmp"
    save_checkpoint(ckpt, ckpt_path)
    print(ckpt_path)


def _cmd_train_seq(args) -> None:
    out = _out_dir(args)
    records = load_manifest(args.manifest)
    picks = _picks(records, _parse_hours(args.hours),
                   args.max_deviation_min)
    train_seqs, _ = split_sequence(picks, args.n, test_slot=args.test_slot)
    config = _config(args, "sequence")
    with _progress_file(out / "progress.csv") as sink:
        ckpt = train_sequence(config, train_seqs, progress=sink,
                              threads=args.threads)
    ckpt_path = out / "checkpoint.atmp"
    save_checkpoint(ckpt, ckpt_path)
    print(ckpt_path)


def _cmd_eval_single(args) -> None:
    out = _out_dir(args)
    ckpt = load_checkpoint(args.checkpoint)
    records = load_manifest(args.manifest)
    if args.hour is not None:
        picks = select_hour_slot(records, args.hour, args.max_deviation_min)
        records = [p.record for p in picks]
    if args.fold is not None:
        _, records = split_single_image(records, args.k, args.fold,
                                        ckpt.config.seed)
    report = evaluation.eval_single(ckpt, records, decode_mode=args.decode,
                                    threads=args.threads)
    _write_report(report, out, "eval_single")
    print(f"average_rmse_c {report.average_rmse:.3f}")


def _cmd_eval_seq(args) -> None:
    out = _out_dir(args)
    ckpt = load_checkpoint(args.checkpoint)
    records = load_manifest(args.manifest)
    picks = _picks(records, _parse_hours(args.hours),
                   args.max_deviation_min)
    n = ckpt.config.sequence_length
    train_seqs, test_seqs = split_sequence(picks, n,
                                           test_slot=args.test_slot)
    report = evaluation.eval_sequence(ckpt, test_seqs,
                                      decode_mode=args.decode,
                                      threads=args.threads)
    _write_report(report, out, "eval_seq")
    print(f"average_rmse_c {report.average_rmse:.3f}")
    if args.baselines:
        persist = evaluation.baseline_persistence(test_seqs)
        _write_report(persist, out, "baseline_persistence")
        train_records = sorted({r.image_path: r for s in train_seqs
                                for r in s.records}.values(),
                               key=lambda r: (r.camera_id, r.timestamp))
        test_records = [s.records[-1] for s in test_seqs]
        clima = evaluation.baseline_climatology(train_records, test_records)
        _write_report(clima, out, "baseline_climatology")
        print(f"persistence_rmse_c {persist.average_rmse:.3f}")
        print(f"climatology_rmse_c {clima.average_rmse:.3f}")


def _cmd_sweep_n(args) -> None:
    out = _out_dir(args)
    records = load_manifest(args.manifest)
    picks = _picks(records, _parse_hours(args.hours),
                   args.max_deviation_min)
    config = _config(args, "sequence")
    rows = evaluation.sweep_sequence_length(config, picks,
                                            _parse_ints(args.n_values),
                                            test_slot=args.test_slot,
                                            threads=args.threads)
    evaluation.write_table_csv(rows, out / "sweep_n.csv",
                               ["n", "average_rmse", "train_sequences",
                                "test_sequences"])
    for row in rows:
        print(f"n {row['n']} average_rmse_c {row['average_rmse']:.3f}")


def _cmd_sweep_hours(args) -> None:
    out = _out_dir(args)
    records = load_manifest(args.manifest)
    hours = _parse_hours(args.hours)
    picks = _picks(records, hours, args.max_deviation_min)
    config = _config(args, "sequence")
    rows = evaluation.sweep_hours(config, picks, hours,
                                  threads=args.threads)
    evaluation.write_table_csv(rows, out / "sweep_hours.csv",
                               ["hour", "average_rmse", "train_sequences",
                                "test_sequences"])
    for row in rows:
        print(f"hour {row['hour']} average_rmse_c "
              f"{row['average_rmse']:.3f}")


def _cmd_regions(args) -> None:
    out = _out_dir(args)
    records = load_manifest(args.manifest)
    picks = _picks(records, _parse_hours(args.hours),
                   args.max_deviation_min)
    masks = load_masks(args.masks)
    config = _config(args, args.task)
    regions = tuple(r.strip() for r in args.regions.split(",") if r.strip())
    rows = evaluation.compare_regions(config, picks, masks, regions=regions,
                                      test_slot=args.test_slot,
                                      threads=args.threads)
    evaluation.write_table_csv(rows, out / "regions.csv",
                               ["region", "average_rmse"])
    for row in rows:
        print(f"region {row['region']} average_rmse_c "
              f"{row['average_rmse']:.3f}")


def _cmd_predict(args) -> None:
    ckpt = load_checkpoint(args.checkpoint)
    model = ckpt.build_model()
    size = ckpt.config.input_size
    imgs = []
    for path in args.images:
        img = load_image(path)
        if img.shape[1:] != (size, size):
            img = resize_bilinear(img, size, size)
        imgs.append(img)
    if ckpt.config.task == "single":
        if len(imgs) != 1:
            raise ValueError("a single-image checkpoint predicts from "
                             "exactly 1 image")
        temps = evaluation.predict_single(model, np.stack(imgs),
                                          decode_mode=args.decode)
    else:
        n = ckpt.config.sequence_length
        if len(imgs) != n:
            raise ValueError(f"this sequence checkpoint predicts from "
                             f"exactly {n} images, got {len(imgs)}")
        batch = np.stack(imgs)[None, ...]
        temps = evaluation.predict_sequence(model, batch,
                                            decode_mode=args.decode)
    print(f"{temps[0]:.1f}")


def _cmd_curve(args) -> None:
    out = _out_dir(args)
    ckpt = load_checkpoint(args.checkpoint)
    records = load_manifest(args.manifest)
    picks = select_hour_slot(records, args.test_slot,
                             args.max_deviation_min)
    sequences = build_sequences(picks, ckpt.config.sequence_length)
    path = out / "curve.csv"
    evaluation.export_curve(ckpt, args.camera, sequences, path,
                            decode_mode=args.decode, threads=args.threads)
    print(path)


def _cmd_saliency(args) -> None:
    out = _out_dir(args)
    records = load_manifest(args.manifest)
    picks = [p for p in select_hour_slot(records, args.hour,
                                         args.max_deviation_min)
             if p.camera_id == args.camera]
    if not picks:
        raise ValueError(f"unknown camera {args.camera!r} (no picks at "
                         f"hour {args.hour})")
    if args.max_days is not None:
        picks = picks[:args.max_days]
    images = [load_image(p.record.image_path) for p in picks]
    vmap = block_variation_map(images, block_size=args.block_size)
    path = out / f"saliency_{args.camera}.png"
    render_map(vmap, path)
    print(path)


def _build_parser() -> _Parser:
    parser = _Parser(prog="scenetemp",
                     description="Ambient temperature from outdoor webcam "
                                 "images: synthesis, training, evaluation.")
    subs = parser.add_subparsers(dest="command", required=True,
                                 parser_class=_Parser)

    def sub(name, handler, help_text):
        p = subs.add_parser(name, help=help_text)
        p.set_defaults(handler=handler)
        p.add_argument("--threads", type=int, default=None,
                       help="worker thread cap (default: machine cores)")
        return p

    p = sub("synth", _cmd_synth, "generate a synthetic camera world")
    p.add_argument("--out", required=True)
    p.add_argument("--num-cameras", type=int, default=2)
    p.add_argument("--days", type=int, default=365)
    p.add_argument("--slots", default="8-17")
    p.add_argument("--image-size", type=int, default=48)
    p.add_argument("--noise-sd", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--amplitude", type=float, default=15.0)
    p.add_argument("--base", type=float, default=5.0)
    p.add_argument("--diurnal-amp", type=float, default=3.0)
    p.add_argument("--sky-tracks-temp", action=argparse.BooleanOptionalAction,
                   default=True)
    p.add_argument("--ground-tracks-temp",
                   action=argparse.BooleanOptionalAction, default=True)

    p = sub("train-single", _cmd_train_single,
            "train the single-image classifier")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--hour", type=int, default=None,
                   help="restrict training to this hour slot")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--fold", type=int, default=None,
                   help="hold out this fold (omit to train on everything)")
    p.add_argument("--max-deviation-min", type=float, default=90)
    _model_flags(p)

    p = sub("train-seq", _cmd_train_seq, "train the sequence forecaster")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--hours", default="8-17")
    p.add_argument("--test-slot", type=int, default=11)
    p.add_argument("--max-deviation-min", type=float, default=90)
    _model_flags(p)

    p = sub("eval-single", _cmd_eval_single,
            "evaluate a single-image checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--decode", choices=["argmax", "expectation"],
                   default="argmax")
    p.add_argument("--hour", type=int, default=None)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--fold", type=int, default=None,
                   help="evaluate on this fold's test slice")
    p.add_argument("--max-deviation-min", type=float, default=90)

    p = sub("eval-seq", _cmd_eval_seq, "evaluate a sequence checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--decode", choices=["argmax", "expectation"],
                   default="argmax")
    p.add_argument("--hours", default="8-17")
    p.add_argument("--test-slot", type=int, default=11)
    p.add_argument("--max-deviation-min", type=float, default=90)
    p.add_argument("--baselines", action="store_true",
                   help="also score persistence and climatology baselines")

    p = sub("sweep-n", _cmd_sweep_n, "sequence-length sweep")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n-values", default="2,3,4,5,6,7")
    p.add_argument("--hours", default="8-17")
    p.add_argument("--test-slot", type=int, default=11)
    p.add_argument("--max-deviation-min", type=float, default=90)
    _model_flags(p)

    p = sub("sweep-hours", _cmd_sweep_hours, "held-out-hour sweep")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--hours", default="8-17")
    p.add_argument("--max-deviation-min", type=float, default=90)
    _model_flags(p)

    p = sub("regions", _cmd_regions, "sky/ground/entire comparison")
    p.add_argument("--manifest", required=True)
    p.add_argument("--masks", required=True,
                   help="directory of <camera_id>.mask.png files")
    p.add_argument("--out", required=True)
    p.add_argument("--task", choices=["single", "sequence"],
                   default="sequence")
    p.add_argument("--regions", default="sky,ground,entire")
    p.add_argument("--hours", default="8-17")
    p.add_argument("--test-slot", type=int, default=11)
    p.add_argument("--max-deviation-min", type=float, default=90)
    _model_flags(p)

    p = sub("predict", _cmd_predict, "predict one temperature")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--decode", choices=["argmax", "expectation"],
                   default="argmax")
    p.add_argument("images", nargs="+",
                   help="1 image (single) or n images oldest-first (seq)")

    p = sub("curve", _cmd_curve, "export truth-vs-prediction curve CSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--camera", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--decode", choices=["argmax", "expectation"],
                   default="argmax")
    p.add_argument("--test-slot", type=int, default=11)
    p.add_argument("--max-deviation-min", type=float, default=90)

    p = sub("saliency", _cmd_saliency, "render a block-variation map")
    p.add_argument("--manifest", required=True)
    p.add_argument("--camera", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--hour", type=int, default=11)
    p.add_argument("--block-size", type=int, default=5)
    p.add_argument("--max-days", type=int, default=None)
    p.add_argument("--max-deviation-min", type=float, default=90)

    return parser


if __name__ == "__main__":
    main()
