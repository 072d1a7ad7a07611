"""Temperature label encodings.

Temperatures are discretized onto a uniform class grid (70 one-degree bins
from -20 C by default).  A label is a probability vector over that grid,
produced either as a one-hot vector or as a normalized Gaussian bump around
the true class (soft "local distribution" labels).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TemperatureScale:
    """Uniform class grid over the supported temperature range."""

    min_degree: int = -20
    num_classes: int = 70
    step: int = 1

    def __post_init__(self) -> None:
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.step <= 0:
            raise ValueError(f"step must be positive, got {self.step}")

    @property
    def max_degree(self) -> int:
        return self.min_degree + (self.num_classes - 1) * self.step

    def degrees(self) -> np.ndarray:
        """Degree represented by each class index, in order."""
        return self.min_degree + self.step * np.arange(self.num_classes)


DEFAULT_SCALE = TemperatureScale()


def temp_to_index(temp_c: float, scale: TemperatureScale = DEFAULT_SCALE) -> int:
    """Map a temperature to its class index on the scale.

    Out-of-range temperatures are clamped to the scale bounds with a logged
    warning; non-integer temperatures round to the nearest class, halves
    away from zero.
    """
    temp_c = float(temp_c)
    if not math.isfinite(temp_c):
        raise ValueError(f"temperature must be finite, got {temp_c}")
    lo, hi = scale.min_degree, scale.max_degree
    half = scale.step / 2.0
    if temp_c < lo - half or temp_c > hi + half:
        logger.warning(
            "temperature %.2f C outside [%d, %d] C; clamping", temp_c, lo, hi
        )
    clamped = min(max(temp_c, lo), hi)
    # (clamped - lo)/step is non-negative, so floor(x + 0.5) rounds half away
    # from zero.
    return int(math.floor((clamped - lo) / scale.step + 0.5))


def encode_one_hot(temp_c: float, scale: TemperatureScale = DEFAULT_SCALE) -> np.ndarray:
    """One-hot label vector with the 1 at the temperature's class index."""
    vec = np.zeros(scale.num_classes)
    vec[temp_to_index(temp_c, scale)] = 1.0
    return vec


def encode_lde(
    temp_c: float, sigma: float, scale: TemperatureScale = DEFAULT_SCALE
) -> np.ndarray:
    """Soft label: a Gaussian bump of width ``sigma`` centered on the class.

    Entry j is proportional to exp(-(j - i)^2 / (2 sigma^2)) where i is the
    temperature's class index; the vector is normalized to sum to 1 so it can
    serve as a target distribution.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    i = temp_to_index(temp_c, scale)
    j = np.arange(scale.num_classes, dtype=np.float64)
    vec = np.exp(-((j - i) ** 2) / (2.0 * sigma * sigma))
    return vec / vec.sum()


def decode(
    label: np.ndarray,
    scale: TemperatureScale = DEFAULT_SCALE,
    mode: str = "argmax",
) -> float:
    """Turn a label vector back into degrees C.

    ``argmax`` returns the degree of the maximal entry (lowest index wins
    ties); ``expectation`` returns the probability-weighted mean degree.
    """
    label = np.asarray(label, dtype=np.float64)
    if label.shape != (scale.num_classes,):
        raise ShapeError(
            f"label shape {label.shape} does not match scale ({scale.num_classes},)"
        )
    if (label < 0).any():
        raise ValueError("label vector has negative entries")
    if not label.any():
        raise ValueError("cannot decode an all-zero label vector")
    if mode == "argmax":
        return float(scale.min_degree + scale.step * int(np.argmax(label)))
    if mode == "expectation":
        return float(np.dot(label, scale.degrees()))
    raise ValueError(f"unknown decode mode {mode!r}; use 'argmax' or 'expectation'")
