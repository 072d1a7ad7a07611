"""Image file loading, saving, and resizing.

Images travel through the package as channel-first float arrays: shape
(C, H, W), values in [0, 1]. Masks are boolean (H, W) arrays where True
marks sky pixels.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError, ShapeError

MASK_SUFFIX = ".mask.png"


def load_image(path) -> np.ndarray:
    """Load an image file as (3, H, W) float32 in [0, 1].

    Non-RGB files (grayscale, palette, RGBA) are converted to RGB first.

    Raises:
        DataError: If the file is missing or not a decodable image.
    """
    try:
        with Image.open(path) as img:
            rgb = img.convert("RGB")
            arr = np.asarray(rgb, dtype=np.float32) / 255.0
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot load image {path}: {exc}") from exc
    return np.ascontiguousarray(arr.transpose(2, 0, 1))


def save_image(path, array: np.ndarray) -> None:
    """Write a float array in [0, 1] as an 8-bit PNG (or whatever the
    extension implies).

    Accepts (3, H, W) for RGB or (H, W) for grayscale. Values are clipped
    to [0, 1] before quantization.
    """
    arr = np.asarray(array, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[0] == 3:
        data = arr.transpose(1, 2, 0)
        mode = "RGB"
    elif arr.ndim == 2:
        data = arr
        mode = "L"
    else:
        raise ShapeError(f"save_image expects (3, H, W) or (H, W), got {arr.shape}")
    quant = np.clip(np.rint(data * 255.0), 0, 255).astype(np.uint8)
    os.makedirs(os.path.dirname(os.fspath(path)) or ".", exist_ok=True)
    Image.fromarray(quant, mode=mode).save(path)


def load_mask(path) -> np.ndarray:
    """Load a mask image as boolean (H, W); any nonzero pixel is True."""
    try:
        with Image.open(path) as img:
            arr = np.asarray(img.convert("L"))
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot load mask {path}: {exc}") from exc
    return arr > 0


def load_masks(directory) -> dict:
    """Scan a directory for ``<camera_id>.mask.png`` files.

    Returns:
        Mapping camera_id -> boolean (H, W) mask. Empty if none found.
    """
    out = {}
    root = Path(directory)
    if not root.is_dir():
        raise DataError(f"mask directory {directory} does not exist")
    for entry in sorted(root.iterdir()):
        if entry.name.endswith(MASK_SUFFIX):
            camera_id = entry.name[:-len(MASK_SUFFIX)]
            out[camera_id] = load_mask(entry)
    return out


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize (C, H, W) with bilinear interpolation, half-pixel centers.

    Output pixel (r, c) samples the source at
    ((r + 0.5) * H/out_h - 0.5, (c + 0.5) * W/out_w - 0.5), clamped to the
    image; the four surrounding source pixels are blended by distance.
    """
    if img.ndim != 3:
        raise ShapeError(f"resize_bilinear expects (C, H, W), got {img.shape}")
    if out_h < 1 or out_w < 1:
        raise ValueError(f"output size must be positive, got {out_h}x{out_w}")
    c, h, w = img.shape
    if (out_h, out_w) == (h, w):
        return img.copy()
    ys = np.clip((np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5,
                 0.0, h - 1.0)
    xs = np.clip((np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5,
                 0.0, w - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0).astype(img.dtype)[:, None]
    wx = (xs - x0).astype(img.dtype)[None, :]
    rows0 = img[:, y0]
    rows1 = img[:, y1]
    top = rows0[:, :, x0] * (1 - wx) + rows0[:, :, x1] * wx
    bot = rows1[:, :, x0] * (1 - wx) + rows1[:, :, x1] * wx
    return top * (1 - wy) + bot * wy
