"""Dataset machinery: manifests, hour slots, sequences, splits, crops.

The pipeline is manifest rows -> ImageRecord -> HourSlotPick (one record
per camera, day, and hour slot) -> SequenceSample (n strictly consecutive
days of the same camera and slot). Splitting utilities keep training and
test data disjoint at the record-path level.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encoding import DEFAULT_SCALE, encode_lde, encode_one_hot
from .errors import DataError, EmptyRegionError, FormatError, ShapeError
from .imageio import load_image, resize_bilinear

logger = logging.getLogger(__name__)

MANIFEST_COLUMNS = ("camera_id", "timestamp", "image_path", "temperature_c")
REGIONS = ("sky", "ground", "entire")
MIN_SLOT_HOUR = 8
MAX_SLOT_HOUR = 17


@dataclass(frozen=True)
class ImageRecord:
    """One manifest row: an image file and its ground-truth temperature."""

    camera_id: str
    timestamp: dt.datetime
    image_path: str
    temperature_c: float


@dataclass(frozen=True)
class HourSlotPick:
    """The record chosen to represent (camera, day) for one hour slot."""

    camera_id: str
    day: dt.date
    hour: int
    record: ImageRecord
    deviation_min: float


@dataclass(frozen=True)
class SequenceSample:
    """n records of one camera and slot on strictly consecutive days."""

    camera_id: str
    hour: int
    records: tuple

    def __post_init__(self):
        if len(self.records) < 2:
            raise ValueError("a sequence needs at least 2 records")

    @property
    def length(self) -> int:
        return len(self.records)

    @property
    def days(self) -> tuple:
        return tuple(r.timestamp.date() for r in self.records)

    @property
    def temperatures(self) -> tuple:
        return tuple(r.temperature_c for r in self.records)

    def targets(self, *, encoding: str = "lde", sigma: float = 4.0,
                scale=DEFAULT_SCALE) -> np.ndarray:
        """Encode the per-step temperatures as an (n, num_classes) array."""
        if encoding == "one_hot":
            rows = [encode_one_hot(t, scale) for t in self.temperatures]
        elif encoding == "lde":
            rows = [encode_lde(t, sigma, scale) for t in self.temperatures]
        else:
            raise ValueError(f"unknown encoding {encoding!r}")
        return np.stack(rows)


def _parse_timestamp(raw: str) -> dt.datetime:
    ts = dt.datetime.fromisoformat(raw.strip().replace("Z", "+00:00"))
    if ts.tzinfo is None:
        raise ValueError("timestamp lacks a UTC offset")
    return ts


def load_manifest(path) -> list:
    """Read a manifest CSV into ImageRecords.

    The file must carry the header columns camera_id, timestamp,
    image_path, temperature_c. Timestamps are ISO-8601 with a UTC offset.
    Rows with unparseable fields are skipped with a logged warning each.
    Relative image paths are resolved against the manifest's directory.

    Returns:
        Records sorted by (camera_id, timestamp).

    Raises:
        DataError: Missing file.
        FormatError: Missing header or missing required column.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"manifest file {path} does not exist")
    base = path.parent
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise FormatError(f"manifest {path} has no header row")
        for col in MANIFEST_COLUMNS:
            if col not in reader.fieldnames:
                raise FormatError(f"manifest {path} is missing column {col!r}")
        for lineno, row in enumerate(reader, start=2):
            try:
                camera_id = (row["camera_id"] or "").strip()
                if not camera_id:
                    raise ValueError("empty camera_id")
                ts = _parse_timestamp(row["timestamp"] or "")
                rel = (row["image_path"] or "").strip()
                if not rel:
                    raise ValueError("empty image_path")
                temp = float(row["temperature_c"])
                if not math.isfinite(temp):
                    raise ValueError(f"non-finite temperature {temp}")
            except (ValueError, TypeError) as exc:
                logger.warning("manifest %s line %d skipped: %s",
                               path, lineno, exc)
                continue
            img_path = Path(rel)
            if not img_path.is_absolute():
                img_path = base / img_path
            records.append(ImageRecord(camera_id, ts, str(img_path), temp))
    records.sort(key=lambda r: (r.camera_id, r.timestamp))
    return records


def select_hour_slot(records, hour: int, max_deviation_min: float = 90):
    """Pick one record per (camera, local day) nearest the slot time.

    The slot time is hour:00 on the record's own local calendar day (the
    day implied by its UTC offset). Days whose nearest record deviates by
    more than max_deviation_min minutes contribute no pick. Ties go to the
    earlier timestamp. Output order and content are independent of the
    input ordering.

    Args:
        records: ImageRecords.
        hour: Slot hour, 8..17.
        max_deviation_min: Largest accepted |record time - slot time|.

    Returns:
        HourSlotPicks sorted by (camera_id, day).
    """
    if not MIN_SLOT_HOUR <= hour <= MAX_SLOT_HOUR:
        raise ValueError(f"hour must be in {MIN_SLOT_HOUR}..{MAX_SLOT_HOUR}, "
                         f"got {hour}")
    if max_deviation_min <= 0:
        raise ValueError("max_deviation_min must be positive")
    best = {}
    for rec in records:
        day = rec.timestamp.date()
        slot_time = rec.timestamp.replace(hour=hour, minute=0, second=0,
                                          microsecond=0)
        deviation = abs((rec.timestamp - slot_time).total_seconds()) / 60.0
        if deviation > max_deviation_min:
            continue
        key = (rec.camera_id, day)
        cur = best.get(key)
        if cur is None or (deviation, rec.timestamp) < (cur[0],
                                                        cur[1].timestamp):
            best[key] = (deviation, rec)
    picks = [HourSlotPick(cam, day, hour, rec, deviation)
             for (cam, day), (deviation, rec) in best.items()]
    picks.sort(key=lambda p: (p.camera_id, p.day))
    return picks


def build_sequences(picks, n: int):
    """Slide length-n windows over maximal runs of consecutive days.

    Picks are grouped by (camera, slot hour); within each group, every
    maximal run of day-by-day consecutive picks yields all of its length-n
    windows at stride 1. Windows never span a missing day.

    Raises:
        ValueError: n < 2.
    """
    if n < 2:
        raise ValueError(f"sequence length must be >= 2, got {n}")
    groups = {}
    for p in picks:
        groups.setdefault((p.camera_id, p.hour), []).append(p)
    samples = []
    for (camera_id, hour), group in sorted(groups.items()):
        group.sort(key=lambda p: p.day)
        run = []
        for pick in group:
            if run and (pick.day - run[-1].day).days != 1:
                samples.extend(_windows(camera_id, hour, run, n))
                run = []
            run.append(pick)
        samples.extend(_windows(camera_id, hour, run, n))
    return samples


def _windows(camera_id, hour, run, n):
    for start in range(len(run) - n + 1):
        records = tuple(p.record for p in run[start:start + n])
        yield SequenceSample(camera_id, hour, records)


def split_single_image(records, k: int = 5, fold: int = 0, seed: int = 0):
    """Deterministic k-fold split of single-image records.

    Records are shuffled with a generator seeded from `seed`, cut into k
    nearly equal contiguous slices, and slice `fold` becomes the test set.
    The test slices of all folds partition the input.

    Returns:
        (train_records, test_records)
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if not 0 <= fold < k:
        raise ValueError(f"fold must be in 0..{k - 1}, got {fold}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(records))
    slices = np.array_split(order, k)
    test_idx = set(slices[fold].tolist())
    train = [records[i] for i in order if i not in test_idx]
    test = [records[i] for i in slices[fold]]
    return train, test


def split_sequence(picks, n: int, test_slot: int = 11):
    """Hold out one hour slot for testing; train on all other slots.

    Test sequences are built from the picks at `test_slot`. Training
    sequences come from every other slot, after removing any pick whose
    underlying image file also appears in the test picks, so train and
    test record paths never intersect. Training sequences from all cameras
    are pooled.

    Returns:
        (train_sequences, test_sequences)
    """
    test_picks = [p for p in picks if p.hour == test_slot]
    test_paths = {p.record.image_path for p in test_picks}
    train_picks = [p for p in picks
                   if p.hour != test_slot
                   and p.record.image_path not in test_paths]
    return build_sequences(train_picks, n), build_sequences(test_picks, n)


def crop_region(image: np.ndarray, mask: np.ndarray, region: str) -> np.ndarray:
    """Crop the minimal bounding box of the sky (mask True) or ground
    (mask False) pixels out of a (C, H, W) image.

    The crop is the raw rectangle: it can include pixels of the other
    region that fall inside the bounding box.

    Raises:
        ShapeError: Mask and image spatial dims differ.
        EmptyRegionError: The requested region has no pixels.
        ValueError: Unknown region name.
    """
    if image.ndim != 3:
        raise ShapeError(f"crop_region expects (C, H, W) image, got {image.shape}")
    if mask.shape != image.shape[1:]:
        raise ShapeError(f"mask shape {mask.shape} does not match image "
                         f"spatial dims {image.shape[1:]}")
    if region == "sky":
        wanted = mask.astype(bool)
    elif region == "ground":
        wanted = ~mask.astype(bool)
    elif region == "entire":
        return image.copy()
    else:
        raise ValueError(f"region must be one of {REGIONS}, got {region!r}")
    rows = np.flatnonzero(wanted.any(axis=1))
    cols = np.flatnonzero(wanted.any(axis=0))
    if rows.size == 0 or cols.size == 0:
        raise EmptyRegionError(f"mask has no {region} pixels")
    return image[:, rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1].copy()


def _prepare_one(path, input_size, region, mask):
    img = load_image(path)
    if region != "entire":
        if mask is None:
            raise DataError(f"no mask available for image {path}")
        img = crop_region(img, mask, region)
    if img.shape[1] != input_size or img.shape[2] != input_size:
        img = resize_bilinear(img, input_size, input_size)
    return img


def load_inputs(records, input_size: int, *, region: str = "entire",
                masks=None, threads=None) -> np.ndarray:
    """Load, optionally crop, and resize record images into one batch.

    Args:
        records: ImageRecords to load.
        input_size: Target square side length.
        region: "entire", "sky", or "ground"; non-entire requires masks.
        masks: Mapping camera_id -> boolean (H, W) mask.
        threads: Worker thread cap for decoding (None = default pool).

    Returns:
        (N, 3, input_size, input_size) float32 array, ordered like records.

    Raises:
        DataError: Missing mask for a camera, or undecodable image.
    """
    if region not in REGIONS:
        raise ValueError(f"region must be one of {REGIONS}, got {region!r}")
    if region != "entire":
        masks = masks or {}
        missing = sorted({r.camera_id for r in records} - set(masks))
        if missing:
            raise DataError(f"missing sky mask for camera(s): "
                            f"{', '.join(missing)}")

    def job(rec):
        mask = masks.get(rec.camera_id) if region != "entire" else None
        return _prepare_one(rec.image_path, input_size, region, mask)

    if threads == 1 or len(records) <= 1:
        arrays = [job(r) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            arrays = list(pool.map(job, records))
    if not arrays:
        return np.zeros((0, 3, input_size, input_size), dtype=np.float32)
    return np.stack(arrays)
