"""Shared fixtures: tiny synthetic worlds and acceptance-criteria reporting."""

import time
from contextlib import contextmanager

import pytest

from scenetemp import SynthConfig, load_manifest, load_masks, synth_generate

_CRITERIA = {}


@pytest.fixture(scope="session")
def criteria():
    """Context manager that records one pass/fail line per criterion.

    Usage:
        with criteria(3, "single-task overfit", budget_s=900):
            ... asserts ...

    The body's assertions decide pass/fail; elapsed time is checked
    against the budget and reported in the terminal summary.
    """

    @contextmanager
    def criterion(num, name, *, budget_s):
        started = time.perf_counter()
        try:
            yield
            elapsed = time.perf_counter() - started
            assert elapsed < budget_s, (
                f"criterion {num} took {elapsed:.1f}s, budget {budget_s}s")
        except BaseException:
            elapsed = time.perf_counter() - started
            _CRITERIA[num] = (name, False, elapsed)
            raise
        _CRITERIA[num] = (name, True, elapsed)

    return criterion


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num in sorted(_CRITERIA):
        name, passed, elapsed = _CRITERIA[num]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(
            f"criterion {num}: {verdict} ({elapsed:.1f}s) - {name}")


@pytest.fixture(scope="session")
def small_world(tmp_path_factory):
    """2 cameras x 30 days x 4 slots at 24 px, kept for the whole session."""
    root = tmp_path_factory.mktemp("small_world")
    cfg = SynthConfig(num_cameras=2, days=30, slots=(10, 11, 12, 13),
                      image_size=24, noise_sd=2.0, seed=7)
    manifest = synth_generate(cfg, root)
    return {
        "config": cfg,
        "root": root,
        "manifest": manifest,
        "records": load_manifest(manifest),
        "masks": load_masks(root),
    }


@pytest.fixture(scope="session")
def micro_world(tmp_path_factory):
    """1 camera x 12 days x 1 slot at 16 px, for fast training tests."""
    root = tmp_path_factory.mktemp("micro_world")
    cfg = SynthConfig(num_cameras=1, days=12, slots=(11,), image_size=16,
                      noise_sd=3.0, seed=9)
    manifest = synth_generate(cfg, root)
    return {
        "config": cfg,
        "root": root,
        "manifest": manifest,
        "records": load_manifest(manifest),
        "masks": load_masks(root),
    }
