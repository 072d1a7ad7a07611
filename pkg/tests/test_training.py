"""Training loops, determinism, and the checkpoint container format."""

import logging
import re
import struct

import numpy as np
import pytest

from scenetemp import (Checkpoint, DataError, FormatError, IntegrityError,
                       NumericError, TrainConfig, VersionError,
                       build_model, build_sequences, load_checkpoint,
                       load_inputs, save_checkpoint, select_hour_slot,
                       train_sequence, train_single)
from scenetemp.training import CHECKPOINT_MAGIC, _check_finite

MICRO = dict(epochs=2, batch_size=4, input_size=16, seed=0)


def micro_config(**kw):
    return TrainConfig(task="single", **{**MICRO, **kw})


def seq_config(**kw):
    base = dict(task="sequence", epochs=2, batch_size=4, input_size=16,
                sequence_length=2, lstm_hidden=8, seed=0)
    return TrainConfig(**{**base, **kw})


def micro_sequences(world, n=2):
    picks = select_hour_slot(world["records"], 11)
    return build_sequences(picks, n)


# ------------------------------------------------------------ train_single

def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(task="both")
    with pytest.raises(ValueError):
        TrainConfig(encoding="two-hot")
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=-0.1)
    with pytest.raises(ValueError):
        TrainConfig(input_size=30)
    with pytest.raises(ValueError):
        TrainConfig(encoding="lde", sigma=0.0)
    assert TrainConfig(task="single").sigma == 3.5
    assert TrainConfig(task="sequence").sigma == 4.0
    assert TrainConfig(task="single").batch_size == 32
    assert TrainConfig(task="sequence").batch_size == 8


def test_zero_learning_rate_keeps_initialization(micro_world):
    cfg = micro_config(learning_rate=0.0, epochs=1)
    ckpt = train_single(cfg, micro_world["records"])
    init = build_model(cfg)
    for name, tensor in init.params().items():
        np.testing.assert_array_equal(ckpt.params[name], tensor)


def test_training_is_deterministic(micro_world, tmp_path):
    lines_a, lines_b = [], []
    a = train_single(micro_config(), micro_world["records"],
                     progress=lines_a.append)
    b = train_single(micro_config(), micro_world["records"],
                     progress=lines_b.append)
    # elapsed seconds are wall clock; epochs and losses must replay exactly
    assert [l.rsplit(",", 1)[0] for l in lines_a] == [
        l.rsplit(",", 1)[0] for l in lines_b]
    save_checkpoint(a, tmp_path / "a.atmp")
    save_checkpoint(b, tmp_path / "b.atmp")
    assert (tmp_path / "a.atmp").read_bytes() == (
        tmp_path / "b.atmp").read_bytes()


def test_different_seed_changes_result(micro_world, tmp_path):
    a = train_single(micro_config(), micro_world["records"])
    b = train_single(micro_config(seed=1), micro_world["records"])
    save_checkpoint(a, tmp_path / "a.atmp")
    save_checkpoint(b, tmp_path / "b.atmp")
    assert (tmp_path / "a.atmp").read_bytes() != (
        tmp_path / "b.atmp").read_bytes()


def test_progress_line_format(micro_world):
    lines = []
    train_single(micro_config(epochs=3), micro_world["records"],
                 progress=lines.append)
    assert len(lines) == 3
    for i, line in enumerate(lines, start=1):
        assert re.fullmatch(rf"{i},\d+\.\d{{6}},\d+\.\d{{3}}", line)


def test_loss_decreases_on_micro_overfit(micro_world):
    lines = []
    train_single(micro_config(epochs=12, learning_rate=0.002),
                 micro_world["records"], progress=lines.append)
    losses = [float(line.split(",")[1]) for line in lines]
    assert losses[-1] < losses[0]


def test_max_train_records_subsample_is_deterministic(micro_world, tmp_path):
    cfg = micro_config(max_train_records=5)
    a = train_single(cfg, micro_world["records"])
    b = train_single(cfg, micro_world["records"])
    save_checkpoint(a, tmp_path / "a.atmp")
    save_checkpoint(b, tmp_path / "b.atmp")
    assert (tmp_path / "a.atmp").read_bytes() == (
        tmp_path / "b.atmp").read_bytes()


def test_target_rmse_stops_on_the_check_epoch(micro_world):
    lines = []
    ckpt = train_single(micro_config(epochs=50, target_train_rmse=100.0),
                        micro_world["records"], progress=lines.append)
    assert ckpt.epoch == 10  # first multiple-of-10 checkpoint satisfies it
    assert len(lines) == 10


def test_empty_records_rejected():
    with pytest.raises(DataError):
        train_single(micro_config(), [])
    with pytest.raises(DataError):
        train_sequence(seq_config(), [])


def test_task_mismatch_rejected(micro_world):
    with pytest.raises(ValueError):
        train_single(seq_config(), micro_world["records"])
    with pytest.raises(ValueError):
        train_sequence(micro_config(), micro_sequences(micro_world))


def test_undecodable_images_are_skipped(micro_world, tmp_path, caplog):
    import dataclasses
    records = list(micro_world["records"][:6])
    bad = dataclasses.replace(records[0],
                              image_path=str(tmp_path / "gone.png"))
    with caplog.at_level(logging.WARNING, logger="scenetemp.training"):
        train_single(micro_config(epochs=1), records + [bad])
    assert any("gone.png" in r.message for r in caplog.records)


def test_nan_loss_aborts_with_location(micro_world):
    cfg = micro_config(learning_rate=1e12, epochs=8)
    with np.errstate(invalid="ignore", over="ignore"):
        with pytest.raises(NumericError, match=r"epoch \d+, batch \d+"):
            train_single(cfg, micro_world["records"][:8])


def test_check_finite_names_epoch_and_batch():
    with pytest.raises(NumericError, match="epoch 3, batch 2"):
        _check_finite(float("nan"), 3, 2)
    _check_finite(1.5, 0, 0)  # finite passes silently


# ---------------------------------------------------------- train_sequence

def test_sequence_training_is_deterministic(small_world, tmp_path):
    seqs = micro_sequences(small_world)[:10]
    a = train_sequence(seq_config(), seqs)
    b = train_sequence(seq_config(), seqs)
    save_checkpoint(a, tmp_path / "a.atmp")
    save_checkpoint(b, tmp_path / "b.atmp")
    assert (tmp_path / "a.atmp").read_bytes() == (
        tmp_path / "b.atmp").read_bytes()


def test_sequence_length_mismatch_names_sequence(small_world):
    seqs = micro_sequences(small_world, n=3)[:4]
    with pytest.raises(DataError, match="cam00"):
        train_sequence(seq_config(sequence_length=2), seqs)


def test_sequence_loss_decreases(small_world):
    lines = []
    train_sequence(seq_config(epochs=6), micro_sequences(small_world)[:8],
                   progress=lines.append)
    losses = [float(line.split(",")[1]) for line in lines]
    assert losses[-1] < losses[0]


# -------------------------------------------------------------- checkpoint

@pytest.fixture(scope="module")
def saved(tmp_path_factory, micro_world):
    """One trained micro checkpoint saved to disk, shared by format tests."""
    path = tmp_path_factory.mktemp("ckpt") / "model.atmp"
    records = micro_world["records"]
    ckpt = train_single(micro_config(), records)
    save_checkpoint(ckpt, path)
    return {"ckpt": ckpt, "path": path, "records": records}


def test_checkpoint_roundtrip_is_bit_exact(saved, micro_world):
    back = load_checkpoint(saved["path"])
    assert back.config == saved["ckpt"].config
    assert back.epoch == saved["ckpt"].epoch
    assert back.adam_state == saved["ckpt"].adam_state
    assert back.rng_state == saved["ckpt"].rng_state
    for name, tensor in saved["ckpt"].params.items():
        np.testing.assert_array_equal(back.params[name], tensor)
    for name, tensor in saved["ckpt"].adam_m.items():
        np.testing.assert_array_equal(back.adam_m[name], tensor)
    for name, tensor in saved["ckpt"].adam_v.items():
        np.testing.assert_array_equal(back.adam_v[name], tensor)

    batch = load_inputs(saved["records"][:4], 16)
    a, _ = saved["ckpt"].build_model().forward(batch)
    b, _ = back.build_model().forward(batch)
    np.testing.assert_array_equal(a, b)


def test_resave_is_byte_identical(saved, tmp_path):
    back = load_checkpoint(saved["path"])
    save_checkpoint(back, tmp_path / "again.atmp")
    assert (tmp_path / "again.atmp").read_bytes() == saved[
        "path"].read_bytes()


def test_truncated_checkpoint_rejected(saved, tmp_path):
    blob = saved["path"].read_bytes()
    for cut in (len(blob) - 1, len(blob) // 2, 10):
        clipped = tmp_path / "clipped.atmp"
        clipped.write_bytes(blob[:cut])
        with pytest.raises(IntegrityError):
            load_checkpoint(clipped)


def test_corrupted_payload_rejected(saved, tmp_path):
    blob = bytearray(saved["path"].read_bytes())
    blob[-1] ^= 0xFF
    target = tmp_path / "flipped.atmp"
    target.write_bytes(bytes(blob))
    with pytest.raises(IntegrityError):
        load_checkpoint(target)


def test_bad_magic_rejected(saved, tmp_path):
    blob = bytearray(saved["path"].read_bytes())
    assert blob[:4] == CHECKPOINT_MAGIC
    blob[:4] = b"JUNK"
    target = tmp_path / "junk.atmp"
    target.write_bytes(bytes(blob))
    with pytest.raises(FormatError):
        load_checkpoint(target)


def test_future_version_rejected(saved, tmp_path):
    blob = bytearray(saved["path"].read_bytes())
    blob[4:8] = struct.pack("<I", 99)
    target = tmp_path / "future.atmp"
    target.write_bytes(bytes(blob))
    with pytest.raises(VersionError):
        load_checkpoint(target)


def test_missing_checkpoint_file(tmp_path):
    with pytest.raises(DataError):
        load_checkpoint(tmp_path / "missing.atmp")


def test_checkpoint_stores_copies(micro_world):
    ckpt = train_single(micro_config(epochs=1), micro_world["records"][:4])
    model = ckpt.build_model()
    name = sorted(ckpt.params)[0]
    before = ckpt.params[name].copy()
    model.params()[name][...] = 0.0
    np.testing.assert_array_equal(ckpt.params[name], before)
