"""RMSE evaluation: reports, baselines, sweeps, and curve export.

Every evaluation produces an EvalReport: per-camera RMSE, the unweighted
average over cameras, and the individual scored samples so any reported
number can be recomputed from the exported per-sample CSV.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .dataset import load_inputs, split_sequence
from .encoding import DEFAULT_SCALE
from .errors import DataError
from .training import (Checkpoint, TrainConfig, load_sequence_inputs,
                       train_sequence, train_single)

logger = logging.getLogger(__name__)

DECODE_MODES = ("argmax", "expectation")


def rmse(predictions, truths) -> float:
    """Root mean squared error between paired °C values.

    Raises:
        ValueError: Empty input or mismatched lengths.
    """
    preds = np.asarray(predictions, dtype=np.float64)
    trs = np.asarray(truths, dtype=np.float64)
    if preds.shape != trs.shape or preds.ndim != 1:
        raise ValueError(f"rmse needs two equal-length 1-D inputs, got "
                         f"{preds.shape} and {trs.shape}")
    if preds.size == 0:
        raise ValueError("rmse of empty input is undefined")
    return float(np.sqrt(np.mean((preds - trs) ** 2)))


@dataclass(frozen=True)
class SampleResult:
    """One scored prediction."""

    camera_id: str
    date: str
    truth_c: float
    pred_c: float


@dataclass
class EvalReport:
    """Per-camera and average RMSE over a set of scored samples."""

    kind: str
    decode_mode: str
    config: dict
    per_camera: dict
    sample_counts: dict
    average_rmse: float
    duration_s: float
    samples: list = field(default_factory=list)

    @classmethod
    def from_samples(cls, kind, samples, *, config=None, decode_mode="",
                     duration_s=0.0):
        """Group samples by camera and compute the RMSE table."""
        if not samples:
            raise ValueError("cannot build a report from zero samples")
        report = cls(kind=kind, decode_mode=decode_mode,
                     config=dict(config or {}), per_camera={},
                     sample_counts={}, average_rmse=0.0,
                     duration_s=duration_s, samples=list(samples))
        grouped = {}
        for s in samples:
            grouped.setdefault(s.camera_id, []).append(s)
        for camera in sorted(grouped):
            group = grouped[camera]
            report.add_camera(camera,
                              rmse([s.pred_c for s in group],
                                   [s.truth_c for s in group]),
                              len(group))
        return report

    def add_camera(self, camera_id: str, camera_rmse: float,
                   count: int) -> None:
        """Add one camera row; duplicate cameras are rejected."""
        if camera_id in self.per_camera:
            raise ValueError(f"duplicate camera entry {camera_id!r}")
        if camera_rmse < 0 or not math.isfinite(camera_rmse):
            raise ValueError(f"invalid RMSE {camera_rmse} for {camera_id!r}")
        self.per_camera[camera_id] = camera_rmse
        self.sample_counts[camera_id] = count
        self.average_rmse = float(np.mean(list(self.per_camera.values())))

    def summary_dict(self) -> dict:
        return {"kind": self.kind, "decode_mode": self.decode_mode,
                "config": self.config, "per_camera": self.per_camera,
                "sample_counts": self.sample_counts,
                "average_rmse": self.average_rmse,
                "duration_s": self.duration_s,
                "num_samples": len(self.samples)}


def decode_batch(probs: np.ndarray, mode: str = "argmax",
                 scale=DEFAULT_SCALE) -> np.ndarray:
    """Decode (N, K) probability rows to °C values."""
    if mode not in DECODE_MODES:
        raise ValueError(f"decode mode must be one of {DECODE_MODES}, "
                         f"got {mode!r}")
    degrees = scale.degrees()
    if probs.ndim != 2 or probs.shape[1] != scale.num_classes:
        raise ValueError(f"expected (N, {scale.num_classes}) rows, "
                         f"got {probs.shape}")
    if mode == "argmax":
        return degrees[np.argmax(probs, axis=1)]
    return probs.astype(np.float64) @ degrees


def predict_single(model, images: np.ndarray, *, decode_mode="argmax",
                   scale=DEFAULT_SCALE, batch: int = 64) -> np.ndarray:
    """Eval-mode °C predictions for an (N, C, S, S) batch."""
    out = np.empty(len(images))
    for start in range(0, len(images), batch):
        probs, _ = model.forward(images[start:start + batch])
        out[start:start + batch] = decode_batch(probs, decode_mode, scale)
    return out


def predict_sequence(model, images: np.ndarray, *, decode_mode="argmax",
                     scale=DEFAULT_SCALE, batch: int = 16) -> np.ndarray:
    """Eval-mode °C predictions for the LAST step of (N, n, C, S, S)."""
    out = np.empty(len(images))
    for start in range(0, len(images), batch):
        probs, _ = model.forward(images[start:start + batch])
        out[start:start + batch] = decode_batch(probs[:, -1], decode_mode,
                                                scale)
    return out


def eval_single(ckpt: Checkpoint, records, *, decode_mode="argmax",
                threads=None, region="entire", masks=None) -> EvalReport:
    """Score a single-image checkpoint on test records."""
    if ckpt.config.task != "single":
        raise ValueError("eval_single requires a task-'single' checkpoint")
    records = list(records)
    if not records:
        raise ValueError("no test records")
    started = time.perf_counter()
    model = ckpt.build_model()
    images = load_inputs(records, ckpt.config.input_size, region=region,
                         masks=masks, threads=threads)
    preds = predict_single(model, images, decode_mode=decode_mode)
    samples = [SampleResult(r.camera_id, r.timestamp.date().isoformat(),
                            r.temperature_c, float(p))
               for r, p in zip(records, preds)]
    return EvalReport.from_samples("single", samples,
                                   config=asdict(ckpt.config),
                                   decode_mode=decode_mode,
                                   duration_s=time.perf_counter() - started)


def eval_sequence(ckpt: Checkpoint, sequences, *, decode_mode="argmax",
                  threads=None, region="entire", masks=None) -> EvalReport:
    """Score a sequence checkpoint: only the last step is decoded."""
    if ckpt.config.task != "sequence":
        raise ValueError("eval_sequence requires a task-'sequence' checkpoint")
    sequences = list(sequences)
    if not sequences:
        raise ValueError("no test sequences")
    n = ckpt.config.sequence_length
    for seq in sequences:
        if seq.length != n:
            raise DataError(f"sequence for camera {seq.camera_id} starting "
                            f"{seq.days[0]} has length {seq.length}, "
                            f"checkpoint expects {n}")
    started = time.perf_counter()
    model = ckpt.build_model()
    images = load_sequence_inputs(sequences, ckpt.config.input_size,
                                  region=region, masks=masks,
                                  threads=threads)
    preds = predict_sequence(model, images, decode_mode=decode_mode)
    samples = [SampleResult(seq.camera_id, seq.days[-1].isoformat(),
                            seq.temperatures[-1], float(p))
               for seq, p in zip(sequences, preds)]
    return EvalReport.from_samples("sequence", samples,
                                   config=asdict(ckpt.config),
                                   decode_mode=decode_mode,
                                   duration_s=time.perf_counter() - started)


def baseline_persistence(sequences) -> EvalReport:
    """Predict each sequence's last temperature as its previous day's."""
    sequences = list(sequences)
    if not sequences:
        raise ValueError("no sequences for the persistence baseline")
    started = time.perf_counter()
    samples = [SampleResult(seq.camera_id, seq.days[-1].isoformat(),
                            seq.temperatures[-1], seq.temperatures[-2])
               for seq in sequences]
    return EvalReport.from_samples("persistence", samples,
                                   duration_s=time.perf_counter() - started)


def baseline_climatology(train_records, test_records) -> EvalReport:
    """Predict each camera's training-set mean temperature."""
    train_records = list(train_records)
    test_records = list(test_records)
    if not train_records or not test_records:
        raise ValueError("climatology baseline needs nonempty train and "
                         "test records")
    started = time.perf_counter()
    sums = {}
    for r in train_records:
        total, count = sums.get(r.camera_id, (0.0, 0))
        sums[r.camera_id] = (total + r.temperature_c, count + 1)
    means = {cam: total / count for cam, (total, count) in sums.items()}
    global_mean = (sum(r.temperature_c for r in train_records)
                   / len(train_records))
    samples = []
    for r in test_records:
        if r.camera_id not in means:
            logger.warning("camera %s absent from training records; "
                           "using the global mean", r.camera_id)
        pred = means.get(r.camera_id, global_mean)
        samples.append(SampleResult(r.camera_id,
                                    r.timestamp.date().isoformat(),
                                    r.temperature_c, pred))
    return EvalReport.from_samples("climatology", samples,
                                   duration_s=time.perf_counter() - started)


def _train_and_eval_sequences(config, train_seqs, test_seqs, *, threads,
                              region="entire", masks=None):
    ckpt = train_sequence(config, train_seqs, threads=threads,
                          region=region, masks=masks)
    return ckpt, eval_sequence(ckpt, test_seqs, threads=threads,
                               region=region, masks=masks)


def sweep_sequence_length(config: TrainConfig, picks, n_values, *,
                          test_slot: int = 11, threads=None):
    """Train and evaluate once per sequence length.

    Each n gets a fresh model with the same seed; the split holds out
    test_slot every time.

    Returns:
        List of {"n", "average_rmse", "train_sequences", "test_sequences"}
        rows, one per requested n, in the given order.
    """
    rows = []
    for n in n_values:
        cfg = replace(config, sequence_length=int(n))
        train_seqs, test_seqs = split_sequence(picks, cfg.sequence_length,
                                               test_slot=test_slot)
        if not train_seqs or not test_seqs:
            raise DataError(f"not enough consecutive days for n={n}")
        _, report = _train_and_eval_sequences(cfg, train_seqs, test_seqs,
                                              threads=threads)
        rows.append({"n": int(n), "average_rmse": report.average_rmse,
                     "train_sequences": len(train_seqs),
                     "test_sequences": len(test_seqs)})
    return rows


def sweep_hours(config: TrainConfig, picks, hours, *, threads=None):
    """Train and evaluate once per held-out hour slot.

    For each hour h, the test set is the slot-h sequences and training
    pools every other slot (minus any shared image files).

    Returns:
        List of {"hour", "average_rmse", ...} rows.
    """
    rows = []
    for hour in hours:
        train_seqs, test_seqs = split_sequence(picks, config.sequence_length,
                                               test_slot=hour)
        if not train_seqs or not test_seqs:
            raise DataError(f"no sequences available for held-out hour "
                            f"{hour}")
        _, report = _train_and_eval_sequences(config, train_seqs, test_seqs,
                                              threads=threads)
        rows.append({"hour": int(hour), "average_rmse": report.average_rmse,
                     "train_sequences": len(train_seqs),
                     "test_sequences": len(test_seqs)})
    return rows


def compare_regions(config: TrainConfig, picks, masks, *,
                    regions=("sky", "ground", "entire"), test_slot: int = 11,
                    threads=None):
    """Train and evaluate once per image region (sky/ground crops, full).

    Masks must cover every camera in the picks. The same train/test split
    (hold out test_slot) is reused for every region.

    Returns:
        List of {"region", "average_rmse"} rows in the given region order.
    """
    cameras = sorted({p.camera_id for p in picks})
    missing = [c for c in cameras if c not in (masks or {})]
    if missing:
        raise DataError(f"missing sky mask for camera(s): "
                        f"{', '.join(missing)}")
    rows = []
    for region in regions:
        if config.task == "single":
            test_picks = [p for p in picks if p.hour == test_slot]
            test_paths = {p.record.image_path for p in test_picks}
            train_recs = [p.record for p in picks
                          if p.hour != test_slot
                          and p.record.image_path not in test_paths]
            test_recs = [p.record for p in test_picks]
            if not train_recs or not test_recs:
                raise DataError("region comparison has an empty split")
            ckpt = train_single(config, train_recs, threads=threads,
                                region=region, masks=masks)
            report = eval_single(ckpt, test_recs, threads=threads,
                                 region=region, masks=masks)
        else:
            train_seqs, test_seqs = split_sequence(
                picks, config.sequence_length, test_slot=test_slot)
            if not train_seqs or not test_seqs:
                raise DataError("region comparison has an empty split")
            _, report = _train_and_eval_sequences(config, train_seqs,
                                                  test_seqs, threads=threads,
                                                  region=region, masks=masks)
        rows.append({"region": region, "average_rmse": report.average_rmse})
    return rows


def export_curve(ckpt: Checkpoint, camera: str, sequences, path, *,
                 decode_mode="argmax", threads=None):
    """Write date,truth_c,prediction_c rows for one camera's sequences.

    Returns:
        The written rows as a list of (date_iso, truth, prediction).

    Raises:
        ValueError: Camera has no sequences in the input.
    """
    selected = [s for s in sequences if s.camera_id == camera]
    if not selected:
        raise ValueError(f"unknown camera {camera!r}")
    report = eval_sequence(ckpt, selected, decode_mode=decode_mode,
                           threads=threads)
    rows = sorted((s.date, s.truth_c, s.pred_c) for s in report.samples)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "truth_c", "prediction_c"])
        for date, truth, pred in rows:
            writer.writerow([date, f"{truth:.12g}", f"{pred:.12g}"])
    return rows


def write_report_json(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.summary_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_per_camera_csv(report: EvalReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["camera_id", "rmse_c", "samples"])
        for camera, value in report.per_camera.items():
            writer.writerow([camera, f"{value:.12g}",
                             report.sample_counts[camera]])


def write_samples_csv(report: EvalReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["camera_id", "date", "truth_c", "pred_c"])
        for s in report.samples:
            writer.writerow([s.camera_id, s.date, f"{s.truth_c:.12g}",
                             f"{s.pred_c:.12g}"])


def read_samples_csv(path):
    """Load rows written by write_samples_csv back into SampleResults."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(SampleResult(row["camera_id"], row["date"],
                                    float(row["truth_c"]),
                                    float(row["pred_c"])))
    return out


def write_table_csv(rows, path, columns) -> None:
    """Write a list of dict rows as CSV with the given column order."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.12g}"
    return value
