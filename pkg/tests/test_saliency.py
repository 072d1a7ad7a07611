"""Block-variation saliency maps."""

import numpy as np
import pytest

from scenetemp import (ShapeError, VariationMap, block_variation_map,
                       load_image, render_map)


def variation_oracle(images, block_size):
    """Slow reference: per-block, per-channel population std over days."""
    stack = np.asarray(images, dtype=np.float64)
    n, c, h, w = stack.shape
    gh, gw = h // block_size, w // block_size
    rho = np.zeros((gh, gw))
    for r in range(gh):
        for col in range(gw):
            stds = []
            for ch in range(c):
                pixels = stack[:, ch,
                               r * block_size:(r + 1) * block_size,
                               col * block_size:(col + 1) * block_size]
                stds.append(pixels.std())
            rho[r, col] = np.mean(stds)
    return rho


def random_stack(shape=(7, 3, 12, 12), seed=0):
    return np.random.default_rng(seed).random(shape)


def test_identical_flat_days_give_zero_map():
    # the statistic pools day and pixel samples per block, so a repeated
    # frame zeroes out only where blocks are spatially constant; dyadic
    # values keep the two-pass mean exact
    frame = np.zeros((3, 10, 10))
    frame[:, :, 5:] = 0.5  # flat within each 5x5 block
    vmap = block_variation_map([frame, frame, frame], block_size=5)
    assert not vmap.rho.any()
    assert not vmap.rho_hat.any()


def test_identical_textured_days_measure_spatial_spread():
    frame = random_stack((1, 3, 10, 10))[0]
    vmap = block_variation_map([frame, frame, frame], block_size=5)
    np.testing.assert_allclose(vmap.rho, variation_oracle([frame] * 3, 5),
                               atol=1e-12)
    assert vmap.rho.max() > 0


def test_single_varying_block_hits_endpoints():
    days = np.zeros((4, 3, 8, 8))
    days[:, :, 0:4, 4:8] = np.arange(4).reshape(4, 1, 1, 1) * 0.2
    vmap = block_variation_map(days, block_size=4)
    assert vmap.rho_hat[0, 1] == 255.0
    assert vmap.rho_hat[0, 0] == 0.0
    assert vmap.rho_hat[1, 0] == 0.0 and vmap.rho_hat[1, 1] == 0.0


def test_matches_two_pass_oracle():
    images = random_stack()
    vmap = block_variation_map(images, block_size=4)
    expect = variation_oracle(images, 4)
    np.testing.assert_allclose(vmap.rho, expect, atol=1e-9)
    lo, hi = expect.min(), expect.max()
    np.testing.assert_allclose(vmap.rho_hat,
                               (expect - lo) / (hi - lo) * 255.0, atol=1e-9)


def test_shift_invariance():
    images = random_stack(seed=1)
    a = block_variation_map(images, block_size=3)
    b = block_variation_map(images + 0.37, block_size=3)
    np.testing.assert_allclose(a.rho, b.rho, atol=1e-12)
    np.testing.assert_allclose(a.rho_hat, b.rho_hat, atol=1e-9)


def test_scale_covariance_and_normalized_invariance():
    images = random_stack(seed=2)
    a = block_variation_map(images, block_size=3)
    b = block_variation_map(images * 2.0, block_size=3)
    np.testing.assert_allclose(b.rho, 2.0 * a.rho, atol=1e-12)
    np.testing.assert_allclose(b.rho_hat, a.rho_hat, atol=1e-9)


def test_day_order_invariance():
    images = random_stack(seed=3)
    a = block_variation_map(images, block_size=4)
    perm = np.random.default_rng(4).permutation(len(images))
    b = block_variation_map(images[perm], block_size=4)
    np.testing.assert_allclose(a.rho, b.rho, atol=1e-12)


def test_partial_blocks_are_cropped():
    images = random_stack((5, 3, 13, 11), seed=5)
    vmap = block_variation_map(images, block_size=4)
    assert (vmap.grid_h, vmap.grid_w) == (3, 2)
    cropped = block_variation_map(images[:, :, :12, :8], block_size=4)
    np.testing.assert_allclose(vmap.rho, cropped.rho, atol=1e-12)


def test_validation():
    with pytest.raises(ValueError):
        block_variation_map(random_stack((1, 3, 8, 8)), block_size=4)
    with pytest.raises(ShapeError):
        block_variation_map([np.zeros((3, 8, 8)), np.zeros((3, 9, 8))],
                            block_size=4)
    with pytest.raises(ValueError):
        block_variation_map(random_stack((3, 3, 8, 8)), block_size=9)
    with pytest.raises(ValueError):
        block_variation_map(random_stack(), block_size=0)


def test_render_rounds_half_up_and_expands(tmp_path):
    rho_hat = np.array([[10.5, 10.49], [254.5, 0.0]])
    vmap = VariationMap(block_size=3, grid_h=2, grid_w=2,
                        rho=rho_hat / 255.0, rho_hat=rho_hat)
    pixels = render_map(vmap)
    assert pixels.shape == (6, 6)
    assert pixels.dtype == np.uint8
    assert pixels[0, 0] == 11 and pixels[0, 3] == 10
    assert pixels[3, 0] == 255 and pixels[3, 3] == 0
    assert (pixels[0:3, 0:3] == 11).all()  # kron expands blocks uniformly

    path = tmp_path / "saliency.png"
    render_map(vmap, path)
    back = load_image(path)
    np.testing.assert_allclose(back[0] * 255.0, pixels, atol=0.5)
