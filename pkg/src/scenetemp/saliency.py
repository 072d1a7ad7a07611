"""Block-variation maps over day-aligned image stacks.

Images of the same scene at the same hour slot across days vary most in
the regions that respond to weather. The map divides the frame into
non-overlapping pixel blocks, pools every pixel of a block across all days
per color channel, takes the population standard deviation per channel,
and averages the channels into one value per block. Min-max normalization
to 0..255 makes the maps comparable across scenes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import ShapeError


@dataclass
class VariationMap:
    """Per-block variation values of one image stack.

    rho holds the raw per-block averaged standard deviations; rho_hat the
    min-max normalized values in [0, 255] (all zero when every block has
    the same rho). Both are (grid_h, grid_w) float arrays.
    """

    block_size: int
    grid_h: int
    grid_w: int
    rho: np.ndarray
    rho_hat: np.ndarray


def block_variation_map(images, block_size: int = 5) -> VariationMap:
    """Compute the block-variation map of a same-camera image stack.

    Args:
        images: Sequence of (C, H, W) arrays, one per day, all identical
            shape. Dimensions not divisible by block_size lose their
            right/bottom remainder.
        block_size: Pixel side length of a block.

    Returns:
        VariationMap with one rho per block: the per-channel population
        standard deviation over all (days x block pixels) samples,
        averaged over channels, then min-max scaled to [0, 255].

    Raises:
        ValueError: Fewer than 2 images, or images smaller than one block.
        ShapeError: Images with differing shapes.
    """
    if block_size < 1:
        raise ValueError(f"block_size must be >= 1, got {block_size}")
    stack = [np.asarray(img, dtype=np.float64) for img in images]
    if len(stack) < 2:
        raise ValueError("need at least 2 images to measure variation")
    shape = stack[0].shape
    if len(shape) != 3:
        raise ShapeError(f"images must be (C, H, W), got {shape}")
    for img in stack[1:]:
        if img.shape != shape:
            raise ShapeError(f"image shapes differ: {shape} vs {img.shape}")
    c, h, w = shape
    grid_h, grid_w = h // block_size, w // block_size
    if grid_h == 0 or grid_w == 0:
        raise ValueError(f"images of {h}x{w} are smaller than one "
                         f"{block_size}x{block_size} block")
    days = np.stack(stack)[:, :, :grid_h * block_size, :grid_w * block_size]
    blocks = (days.reshape(len(stack), c, grid_h, block_size, grid_w,
                           block_size)
                  .transpose(1, 2, 4, 0, 3, 5)
                  .reshape(c, grid_h, grid_w, -1))
    mean = blocks.mean(axis=-1, keepdims=True)
    std = np.sqrt(((blocks - mean) ** 2).mean(axis=-1))
    rho = std.mean(axis=0)
    lo, hi = float(rho.min()), float(rho.max())
    if hi > lo:
        rho_hat = (rho - lo) / (hi - lo) * 255.0
    else:
        rho_hat = np.zeros_like(rho)
    return VariationMap(block_size=block_size, grid_h=grid_h, grid_w=grid_w,
                        rho=rho, rho_hat=rho_hat)


def render_map(vmap: VariationMap, path=None) -> np.ndarray:
    """Paint each block as a uniform block_size-square gray patch.

    Normalized values are rounded half away from zero to integers only
    here; the map itself keeps reals.

    Args:
        vmap: The map to render.
        path: Optional output file (8-bit grayscale PNG/PGM by extension).

    Returns:
        The rendered (grid_h*block_size, grid_w*block_size) uint8 array.
    """
    levels = np.floor(vmap.rho_hat + 0.5).astype(np.uint8)
    pixels = np.kron(levels, np.ones((vmap.block_size, vmap.block_size),
                                     dtype=np.uint8))
    if path is not None:
        parent = os.path.dirname(os.fspath(path))
        if parent:
            os.makedirs(parent, exist_ok=True)
        Image.fromarray(pixels, mode="L").save(path)
    return pixels
