"""Procedural synthetic outdoor-scene generator.

Builds a small world of webcams whose daily temperature follows a yearly
sinusoid plus a diurnal offset and Gaussian noise, and renders images
whose pixels encode that temperature: a sky band whose color brightens
with warmth, a camera-specific static texture band, and a ground band that
darkens with cold and whitens with snow below freezing. The exact
temperature of every frame is written to the manifest, giving tests a
perfect ground truth at desk scale.

Layout written under the output directory:
    manifest.csv
    <camera_id>.mask.png          (sky mask per camera)
    cameras/<camera_id>/<yyyy-mm-dd>T<hh>.png
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .imageio import save_image

YEAR_DAYS = 365
SKY_FRACTION = 0.4
MID_FRACTION = 0.65
SNOW_FULL_BELOW_C = -4.0
DEFAULT_SLOTS = tuple(range(8, 18))


@dataclass(frozen=True)
class SynthConfig:
    """Configuration of the synthetic world.

    Attributes:
        num_cameras: Number of cameras (scenes).
        days: Consecutive calendar days to generate, starting at start_date.
        slots: Capture hours per day (each exactly on the hour, UTC).
        image_size: Square image side in pixels (>= 10).
        noise_sd: Std dev of the Gaussian noise added to each frame's
            temperature.
        seed: Root seed; every stream of randomness derives from it.
        start_date: First calendar day.
        amplitude: Yearly sinusoid amplitude A in °C.
        base: Yearly mean temperature B in °C.
        diurnal_amp: Amplitude of the within-day offset; the offset is
            exactly zero at hour 11.
        sky_tracks_temp: When False the sky band is a constant color and
            carries no temperature information.
        ground_tracks_temp: When False the ground band is static likewise.
        noise_sd_by_slot: Optional ((hour, sd), ...) overrides of noise_sd
            for specific slots.
    """

    num_cameras: int = 2
    days: int = 365
    slots: tuple = DEFAULT_SLOTS
    image_size: int = 48
    noise_sd: float = 2.0
    seed: int = 0
    start_date: dt.date = dt.date(2020, 1, 1)
    amplitude: float = 15.0
    base: float = 5.0
    diurnal_amp: float = 3.0
    sky_tracks_temp: bool = True
    ground_tracks_temp: bool = True
    noise_sd_by_slot: tuple = field(default=())

    def __post_init__(self):
        if self.num_cameras < 1:
            raise ValueError("num_cameras must be >= 1")
        if self.days < 1:
            raise ValueError("days must be >= 1")
        if not self.slots:
            raise ValueError("slots must be nonempty")
        if any(not 0 <= s <= 23 for s in self.slots):
            raise ValueError(f"slots must be hours 0..23, got {self.slots}")
        if len(set(self.slots)) != len(self.slots):
            raise ValueError("slots must be unique")
        if self.image_size < 10:
            raise ValueError("image_size must be >= 10")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        if any(sd < 0 for _, sd in self.noise_sd_by_slot):
            raise ValueError("noise_sd_by_slot overrides must be >= 0")
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")

    def slot_noise_sd(self, hour: int) -> float:
        for h, sd in self.noise_sd_by_slot:
            if h == hour:
                return sd
        return self.noise_sd


def camera_id(index: int) -> str:
    return f"cam{index:02d}"


def camera_phase(config: SynthConfig, cam_index: int) -> int:
    """Day index (mod 365) on which this camera's yearly sinusoid peaks.

    An integer phase guarantees the sampled maximum equals base+amplitude
    exactly on that day; the minimum falls half a day between samples and
    is approached within amplitude*(1-cos(pi/365)).
    """
    return (cam_index * 97) % YEAR_DAYS


def seasonal_temperature(config: SynthConfig, cam_index: int,
                         day_index: int) -> float:
    phase = camera_phase(config, cam_index)
    angle = 2.0 * math.pi * (day_index - phase) / YEAR_DAYS + math.pi / 2.0
    return config.amplitude * math.sin(angle) + config.base


def diurnal_offset(config: SynthConfig, hour: int) -> float:
    return config.diurnal_amp * math.sin(math.pi * (hour - 11) / 12.0)


def _band_rows(size: int):
    sky_end = round(SKY_FRACTION * size)
    mid_end = round(MID_FRACTION * size)
    return sky_end, mid_end


def _temp_bounds(config: SynthConfig):
    sds = [config.noise_sd] + [sd for _, sd in config.noise_sd_by_slot]
    spread = config.amplitude + config.diurnal_amp + 4.0 * max(sds)
    return config.base - spread, config.base + spread


class _CameraLook:
    """Per-camera static appearance, drawn once from a seeded stream."""

    def __init__(self, config: SynthConfig, cam_index: int):
        rng = np.random.default_rng([config.seed, cam_index, 0])
        size = config.image_size
        sky_end, mid_end = _band_rows(size)
        self.tint = rng.uniform(-0.03, 0.03, size=3)
        self.mid_texture = rng.uniform(0.15, 0.85,
                                       size=(mid_end - sky_end, size, 3))
        self.terrain_color = rng.uniform(0.25, 0.55, size=3)
        self.terrain_texture = rng.uniform(0.85, 1.15,
                                           size=(size - mid_end, size, 1))


def render_frame(config: SynthConfig, look: _CameraLook,
                 temp_c: float) -> np.ndarray:
    """Render one (3, S, S) frame for the given exact temperature."""
    size = config.image_size
    sky_end, mid_end = _band_rows(size)
    t_lo, t_hi = _temp_bounds(config)
    if t_hi > t_lo:
        t_norm = min(max((temp_c - t_lo) / (t_hi - t_lo), 0.0), 1.0)
    else:
        t_norm = 0.5
    img = np.empty((size, size, 3), dtype=np.float64)

    if config.sky_tracks_temp:
        sky = np.array([0.15 + 0.65 * t_norm,
                        0.25 + 0.55 * t_norm,
                        0.55 + 0.40 * t_norm])
    else:
        sky = np.array([0.50, 0.50, 0.55])
    img[:sky_end] = sky + look.tint

    img[sky_end:mid_end] = look.mid_texture

    terrain = look.terrain_color * look.terrain_texture
    if config.ground_tracks_temp:
        ground = terrain * (0.55 + 0.45 * t_norm)
        snow = min(max(temp_c / SNOW_FULL_BELOW_C, 0.0), 1.0)
        ground = (1.0 - snow) * ground + snow * 0.95
    else:
        ground = terrain * 0.775
    img[mid_end:] = ground

    return np.clip(img, 0.0, 1.0).transpose(2, 0, 1)


def synth_generate(config: SynthConfig, out_dir) -> Path:
    """Generate the synthetic world under out_dir.

    Writes one PNG per (camera, day, slot), one sky mask per camera, and a
    manifest.csv holding every frame's exact temperature. Byte-identical
    across runs for the same config.

    Returns:
        Path of the written manifest.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    size = config.image_size
    sky_end, _ = _band_rows(size)
    rows = []
    for cam_index in range(config.num_cameras):
        cam = camera_id(cam_index)
        look = _CameraLook(config, cam_index)
        noise_rng = np.random.default_rng([config.seed, cam_index, 1])
        noise = noise_rng.standard_normal((config.days, len(config.slots)))
        mask = np.zeros((size, size), dtype=np.float64)
        mask[:sky_end] = 1.0
        save_image(out / f"{cam}.mask.png", mask)
        cam_dir = out / "cameras" / cam
        cam_dir.mkdir(parents=True, exist_ok=True)
        for day_index in range(config.days):
            day = config.start_date + dt.timedelta(days=day_index)
            seasonal = seasonal_temperature(config, cam_index, day_index)
            for slot_index, hour in enumerate(config.slots):
                temp = (seasonal + diurnal_offset(config, hour)
                        + config.slot_noise_sd(hour)
                        * noise[day_index, slot_index])
                name = f"{day.isoformat()}T{hour:02d}.png"
                save_image(cam_dir / name, render_frame(config, look, temp))
                rows.append((cam, f"{day.isoformat()}T{hour:02d}:00:00+00:00",
                             f"cameras/{cam}/{name}", f"{temp:.6f}"))
    manifest = out / "manifest.csv"
    with open(manifest, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["camera_id", "timestamp", "image_path",
                         "temperature_c"])
        writer.writerows(rows)
    return manifest
