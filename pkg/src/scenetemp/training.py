"""Training orchestration: configs, the two training loops, checkpoints.

Training is a pure function of (config, data): the same config and data
always produce bit-identical checkpoints. All randomness flows through
numpy generators seeded from config.seed — weight init from [seed], the
epoch-e shuffle from [seed, e, 0], and epoch-e dropout from [seed, e, 1].
"""

from __future__ import annotations

import json
import logging
import struct
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dataset import crop_region, load_inputs
from .encoding import DEFAULT_SCALE, encode_lde, encode_one_hot
from .errors import (DataError, FormatError, IntegrityError, NumericError,
                     VersionError)
from .imageio import load_image, resize_bilinear
from .nn import (Adam, CnnModel, SequenceModel, cross_entropy,
                 sequence_sum_squares)

logger = logging.getLogger(__name__)

TASKS = ("single", "sequence")
ENCODINGS = ("one_hot", "lde")
CHECKPOINT_MAGIC = b"ATMP"
CHECKPOINT_VERSION = 1


@dataclass
class TrainConfig:
    """Hyperparameters for either training regime.

    sigma and batch_size default per task when left as None: sigma 3.5
    (single) / 4.0 (sequence), batch_size 32 (single) / 8 (sequence).
    target_train_rmse, when set on the single task, stops training early
    once the decoded training-set RMSE drops to that value (checked every
    10 epochs); it exists for overfitting verification runs.
    """

    task: str = "single"
    encoding: str = "lde"
    sigma: float = None
    learning_rate: float = 0.001
    epochs: int = 90
    batch_size: int = None
    sequence_length: int = 3
    direction: str = "uni"
    seed: int = 0
    input_size: int = 64
    lstm_hidden: int = 128
    max_train_records: int = None
    max_train_sequences: int = None
    target_train_rmse: float = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}, got {self.task!r}")
        if self.encoding not in ENCODINGS:
            raise ValueError(f"encoding must be one of {ENCODINGS}, "
                             f"got {self.encoding!r}")
        if self.sigma is None:
            self.sigma = 3.5 if self.task == "single" else 4.0
        if self.batch_size is None:
            self.batch_size = 32 if self.task == "single" else 8
        if self.encoding == "lde" and self.sigma <= 0:
            raise ValueError("sigma must be positive for lde encoding")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.sequence_length < 2:
            raise ValueError("sequence_length must be >= 2")
        if self.direction not in ("uni", "bi"):
            raise ValueError(f"direction must be uni or bi, "
                             f"got {self.direction!r}")
        if self.input_size < 4 or self.input_size % 4:
            raise ValueError("input_size must be a positive multiple of 4")
        if self.lstm_hidden < 1:
            raise ValueError("lstm_hidden must be >= 1")


@dataclass
class Checkpoint:
    """A trained model plus everything needed to resume or reproduce it."""

    config: TrainConfig
    params: dict
    adam_m: dict
    adam_v: dict
    adam_state: dict
    epoch: int
    rng_state: dict = field(default_factory=dict)

    def build_model(self):
        model = build_model(self.config)
        model.load_params(self.params)
        return model


def build_model(config: TrainConfig, *, rng=None):
    """Construct an untrained model for the config (seeded init)."""
    if rng is None:
        rng = np.random.default_rng([config.seed])
    cnn = CnnModel(input_size=config.input_size, in_channels=3,
                   num_classes=DEFAULT_SCALE.num_classes, rng=rng)
    if config.task == "single":
        return cnn
    return SequenceModel(cnn, lstm_hidden=config.lstm_hidden,
                         direction=config.direction, rng=rng)


def encode_target(temp_c: float, config: TrainConfig,
                  scale=DEFAULT_SCALE) -> np.ndarray:
    if config.encoding == "one_hot":
        return encode_one_hot(temp_c, scale)
    return encode_lde(temp_c, config.sigma, scale)


def _emit(progress, epoch: int, mean_loss: float, started: float) -> None:
    if progress is not None:
        progress(f"{epoch},{mean_loss:.6f},{time.perf_counter() - started:.3f}")


def _check_finite(loss: float, epoch: int, batch_index: int) -> None:
    if not np.isfinite(loss):
        raise NumericError(
            f"non-finite loss {loss} at epoch {epoch}, batch {batch_index}"
        )


def _load_lenient(records, input_size, *, region="entire", masks=None,
                  threads=None):
    """Load record images, skipping undecodable ones with a warning."""

    def job(rec):
        try:
            batch = load_inputs([rec], input_size, region=region,
                                masks=masks, threads=1)
            return batch[0]
        except DataError as exc:
            logger.warning("skipping training image: %s", exc)
            return None

    if threads == 1 or len(records) <= 1:
        results = [job(r) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, records))
    kept = [(rec, arr) for rec, arr in zip(records, results)
            if arr is not None]
    if not kept:
        raise DataError("no decodable training images")
    images = np.stack([arr for _, arr in kept])
    return [rec for rec, _ in kept], images


def _train_rmse_single(model, images, temps, scale) -> float:
    degrees = scale.degrees()
    preds = np.empty(len(images))
    for start in range(0, len(images), 64):
        probs, _ = model.forward(images[start:start + 64])
        preds[start:start + 64] = degrees[np.argmax(probs, axis=1)]
    return float(np.sqrt(np.mean((preds - np.asarray(temps)) ** 2)))


def train_single(config: TrainConfig, records, *, progress=None,
                 threads=None, region="entire", masks=None) -> Checkpoint:
    """Train the single-image CNN classifier.

    Args:
        config: Must have task "single".
        records: Training ImageRecords; undecodable images are skipped
            with a warning.
        progress: Optional callable receiving one "epoch,mean_loss,
            elapsed_s" line per epoch.
        threads: Image-decoding worker cap.
        region: "entire", or "sky"/"ground" to train on mask crops.
        masks: camera_id -> mask, required for non-entire regions.

    Returns:
        Checkpoint with the trained parameters and optimizer state.

    Raises:
        DataError: No records, or none decodable.
        NumericError: Loss became NaN/Inf.
    """
    if config.task != "single":
        raise ValueError(f"train_single requires task 'single', "
                         f"got {config.task!r}")
    if not records:
        raise DataError("training set is empty")
    records = list(records)
    if (config.max_train_records is not None
            and len(records) > config.max_train_records):
        pick_rng = np.random.default_rng([config.seed, 7])
        idx = np.sort(pick_rng.choice(len(records), config.max_train_records,
                                      replace=False))
        records = [records[i] for i in idx]
    records, images = _load_lenient(records, config.input_size,
                                    region=region, masks=masks,
                                    threads=threads)
    targets = np.stack([encode_target(r.temperature_c, config)
                        for r in records]).astype(np.float32)
    temps = [r.temperature_c for r in records]

    model = build_model(config)
    adam = Adam(model.params(), lr=config.learning_rate)
    n = len(records)
    started = time.perf_counter()
    epochs_run = 0
    for epoch in range(1, config.epochs + 1):
        shuffle_rng = np.random.default_rng([config.seed, epoch, 0])
        drop_rng = np.random.default_rng([config.seed, epoch, 1])
        order = shuffle_rng.permutation(n)
        loss_sum = 0.0
        for batch_index, start in enumerate(range(0, n, config.batch_size)):
            batch = order[start:start + config.batch_size]
            probs, caches = model.forward(images[batch], train=True,
                                          rng=drop_rng)
            loss, dprobs = cross_entropy(probs, targets[batch])
            _check_finite(loss, epoch, batch_index)
            model.zero_grads()
            model.backward(dprobs, caches)
            adam.step(model.params(), model.grads())
            loss_sum += loss * len(batch)
        epochs_run = epoch
        _emit(progress, epoch, loss_sum / n, started)
        if (config.target_train_rmse is not None
                and (epoch % 10 == 0 or epoch == config.epochs)):
            current = _train_rmse_single(model, images, temps, DEFAULT_SCALE)
            if current <= config.target_train_rmse:
                logger.info("target train RMSE %.3f reached at epoch %d",
                            current, epoch)
                break
    return _make_checkpoint(config, model, adam, epochs_run)


def train_sequence(config: TrainConfig, sequences, *, progress=None,
                   threads=None, region="entire", masks=None) -> Checkpoint:
    """Train the CNN+LSTM sequence forecaster end to end.

    Every sequence must have exactly config.sequence_length records. The
    loss per sequence is the sum over steps of the squared distance
    between predicted and target distributions; batches average it over
    their sequences.

    Raises:
        DataError: Empty input or a sequence of the wrong length.
        NumericError: Loss became NaN/Inf.
    """
    if config.task != "sequence":
        raise ValueError(f"train_sequence requires task 'sequence', "
                         f"got {config.task!r}")
    sequences = list(sequences)
    if not sequences:
        raise DataError("training set is empty")
    for seq in sequences:
        if seq.length != config.sequence_length:
            raise DataError(
                f"sequence for camera {seq.camera_id} starting "
                f"{seq.days[0]} has length {seq.length}, expected "
                f"{config.sequence_length}"
            )
    if (config.max_train_sequences is not None
            and len(sequences) > config.max_train_sequences):
        pick_rng = np.random.default_rng([config.seed, 7])
        idx = np.sort(pick_rng.choice(len(sequences),
                                      config.max_train_sequences,
                                      replace=False))
        sequences = [sequences[i] for i in idx]

    images = load_sequence_inputs(sequences, config.input_size,
                                  region=region, masks=masks,
                                  threads=threads)
    targets = np.stack([
        seq.targets(encoding=config.encoding, sigma=config.sigma)
        for seq in sequences
    ]).astype(np.float32)

    model = build_model(config)
    adam = Adam(model.params(), lr=config.learning_rate)
    n = len(sequences)
    started = time.perf_counter()
    epochs_run = 0
    for epoch in range(1, config.epochs + 1):
        shuffle_rng = np.random.default_rng([config.seed, epoch, 0])
        drop_rng = np.random.default_rng([config.seed, epoch, 1])
        order = shuffle_rng.permutation(n)
        loss_sum = 0.0
        for batch_index, start in enumerate(range(0, n, config.batch_size)):
            batch = order[start:start + config.batch_size]
            preds, cache = model.forward(images[batch], train=True,
                                         rng=drop_rng)
            loss, dpreds = sequence_sum_squares(preds, targets[batch])
            _check_finite(loss, epoch, batch_index)
            model.zero_grads()
            model.backward(dpreds / len(batch), cache)
            adam.step(model.params(), model.grads())
            loss_sum += loss
        epochs_run = epoch
        _emit(progress, epoch, loss_sum / n, started)
    return _make_checkpoint(config, model, adam, epochs_run)


def load_sequence_inputs(sequences, input_size: int, *, region="entire",
                         masks=None, threads=None) -> np.ndarray:
    """Load sequence frames as (N, n, 3, S, S), decoding each unique
    image file once (stride-1 windows share most of their frames)."""
    paths = []
    seen = set()
    for seq in sequences:
        for rec in seq.records:
            if rec.image_path not in seen:
                seen.add(rec.image_path)
                paths.append((rec.image_path, rec.camera_id))

    def job(item):
        path, cam = item
        img = load_image(path)
        if region != "entire":
            if masks is None or cam not in masks:
                raise DataError(f"missing sky mask for camera {cam}")
            img = crop_region(img, masks[cam], region)
        if img.shape[1:] != (input_size, input_size):
            img = resize_bilinear(img, input_size, input_size)
        return img

    if threads == 1 or len(paths) <= 1:
        arrays = [job(p) for p in paths]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            arrays = list(pool.map(job, paths))
    by_path = {path: arr for (path, _), arr in zip(paths, arrays)}
    if not sequences:
        return np.zeros((0, 0, 3, input_size, input_size), dtype=np.float32)
    n = sequences[0].length
    out = np.empty((len(sequences), n, 3, input_size, input_size),
                   dtype=np.float32)
    for i, seq in enumerate(sequences):
        for j, rec in enumerate(seq.records):
            out[i, j] = by_path[rec.image_path]
    return out


def _make_checkpoint(config, model, adam, epoch) -> Checkpoint:
    return Checkpoint(
        config=config,
        params={k: v.copy() for k, v in model.params().items()},
        adam_m={k: v.copy() for k, v in adam.m.items()},
        adam_v={k: v.copy() for k, v in adam.v.items()},
        adam_state=adam.state(),
        epoch=epoch,
        rng_state={"seed": config.seed, "next_epoch": epoch + 1},
    )


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    """Write a checkpoint as one integrity-checked binary file.

    Layout: magic "ATMP", format version (u32 LE), CRC-32 of the payload
    (u32 LE), then the payload: a length-prefixed JSON meta block (config,
    epoch, optimizer scalars, rng state) followed by a count of tensors
    and each tensor as length-prefixed name, rank, dims, and float32
    little-endian data.
    """
    meta = {
        "config": asdict(ckpt.config),
        "epoch": ckpt.epoch,
        "adam": ckpt.adam_state,
        "rng": ckpt.rng_state,
    }
    tensors = {}
    for name, arr in ckpt.params.items():
        tensors[f"param.{name}"] = arr
    for name, arr in ckpt.adam_m.items():
        tensors[f"adam.m.{name}"] = arr
    for name, arr in ckpt.adam_v.items():
        tensors[f"adam.v.{name}"] = arr

    chunks = []
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    chunks.append(struct.pack("<I", len(meta_bytes)))
    chunks.append(meta_bytes)
    chunks.append(struct.pack("<I", len(tensors)))
    for name in sorted(tensors):
        raw = np.ascontiguousarray(tensors[name], dtype="<f4")
        name_bytes = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(name_bytes)))
        chunks.append(name_bytes)
        chunks.append(struct.pack("<I", raw.ndim))
        chunks.append(struct.pack(f"<{raw.ndim}I", *raw.shape))
        chunks.append(raw.tobytes())
    payload = b"".join(chunks)
    blob = (CHECKPOINT_MAGIC + struct.pack("<I", CHECKPOINT_VERSION)
            + struct.pack("<I", zlib.crc32(payload)) + payload)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(blob)


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.data):
            raise IntegrityError("checkpoint payload is truncated")
        out = self.data[self.pos:self.pos + count]
        self.pos += count
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def load_checkpoint(path) -> Checkpoint:
    """Read a checkpoint written by save_checkpoint.

    Raises:
        FormatError: Not a checkpoint file (bad magic or header).
        VersionError: Unsupported format version.
        IntegrityError: Checksum mismatch or truncation.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"checkpoint file {path} does not exist")
    blob = path.read_bytes()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise FormatError(f"{path} is not a checkpoint file")
    if len(blob) < 12:
        raise IntegrityError(f"checkpoint {path} is truncated")
    version = struct.unpack("<I", blob[4:8])[0]
    if version != CHECKPOINT_VERSION:
        raise VersionError(f"unsupported checkpoint version {version}, "
                           f"expected {CHECKPOINT_VERSION}")
    crc = struct.unpack("<I", blob[8:12])[0]
    payload = blob[12:]
    if zlib.crc32(payload) != crc:
        raise IntegrityError(f"checkpoint {path} failed its checksum")
    cur = _Cursor(payload)
    try:
        meta = json.loads(cur.take(cur.u32()).decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise IntegrityError(f"checkpoint {path} meta block is corrupt: "
                             f"{exc}") from exc
    try:
        config = TrainConfig(**meta["config"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"checkpoint {path} config is invalid: "
                          f"{exc}") from exc
    tensors = {}
    for _ in range(cur.u32()):
        name = cur.take(cur.u32()).decode("utf-8")
        ndim = cur.u32()
        shape = tuple(cur.u32() for _ in range(ndim))
        count = int(np.prod(shape)) if shape else 1
        raw = cur.take(count * 4)
        tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(shape) \
            .astype(np.float32, copy=True)
    params = {}
    adam_m = {}
    adam_v = {}
    for name, arr in tensors.items():
        if name.startswith("param."):
            params[name[len("param."):]] = arr
        elif name.startswith("adam.m."):
            adam_m[name[len("adam.m."):]] = arr
        elif name.startswith("adam.v."):
            adam_v[name[len("adam.v."):]] = arr
        else:
            raise FormatError(f"checkpoint {path} holds unknown tensor "
                              f"{name!r}")
    return Checkpoint(config=config, params=params, adam_m=adam_m,
                      adam_v=adam_v, adam_state=meta["adam"],
                      epoch=int(meta["epoch"]), rng_state=meta.get("rng", {}))
