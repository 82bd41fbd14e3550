"""Data-pipeline image transforms (plain numpy, outside the autodiff graph).

Geometric transforms are applied identically to every co-registered
array of a sample (nearest-neighbour for label grids), photometric
transforms to the radar channel only. Each primitive with neutral
parameters is an exact identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


# -- primitives -----------------------------------------------------------


def flip_h(img: np.ndarray) -> np.ndarray:
    """Mirror the last axis (left/right)."""
    return np.ascontiguousarray(img[..., ::-1])


def flip_v(img: np.ndarray) -> np.ndarray:
    """Mirror the second-to-last axis (up/down)."""
    return np.ascontiguousarray(img[..., ::-1, :])


def rot90k(img: np.ndarray, k: int) -> np.ndarray:
    """Rotate by k right angles in the trailing two axes."""
    return np.ascontiguousarray(np.rot90(img, k=k, axes=(-2, -1)))


def resize_nearest(img: np.ndarray, out_hw: tuple[int, int]) -> np.ndarray:
    h, w = img.shape[-2], img.shape[-1]
    oh, ow = out_hw
    rows = np.minimum((np.arange(oh) + 0.5) * h / oh, h - 1).astype(np.int64)
    cols = np.minimum((np.arange(ow) + 0.5) * w / ow, w - 1).astype(np.int64)
    return np.ascontiguousarray(img[..., rows[:, None], cols[None, :]])


def resize_bilinear(img: np.ndarray, out_hw: tuple[int, int]) -> np.ndarray:
    h, w = img.shape[-2], img.shape[-1]
    oh, ow = out_hw
    ry = np.clip((np.arange(oh) + 0.5) * h / oh - 0.5, 0, h - 1)
    rx = np.clip((np.arange(ow) + 0.5) * w / ow - 0.5, 0, w - 1)
    y0 = np.floor(ry).astype(np.int64)
    x0 = np.floor(rx).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ry - y0)[:, None]
    wx = (rx - x0)[None, :]
    tl = img[..., y0[:, None], x0[None, :]]
    tr = img[..., y0[:, None], x1[None, :]]
    bl = img[..., y1[:, None], x0[None, :]]
    br = img[..., y1[:, None], x1[None, :]]
    top = tl * (1 - wx) + tr * wx
    bot = bl * (1 - wx) + br * wx
    return np.ascontiguousarray(top * (1 - wy) + bot * wy)


def adjust_brightness(sar: np.ndarray, factor: float) -> np.ndarray:
    """Multiplicative brightness, clipped to [0, 1]; identity at 1."""
    if factor == 1.0:
        return sar.copy()
    return np.clip(sar * factor, 0.0, 1.0)


def adjust_gamma(sar: np.ndarray, gamma: float) -> np.ndarray:
    """Power-law correction on [0, 1] intensities; identity at 1."""
    if gamma == 1.0:
        return sar.copy()
    return np.power(np.clip(sar, 0.0, 1.0), gamma)


def add_poisson_noise(sar: np.ndarray, strength: float, rng: np.random.Generator,
                      rate: float = 30.0) -> np.ndarray:
    """sar + strength * (Poisson(rate) - rate)/rate per pixel.

    strength 0 is an exact identity and consumes no randomness.
    """
    if strength == 0.0:
        return sar.copy()
    noise = (rng.poisson(rate, size=sar.shape) - rate) / rate
    return np.clip(sar + strength * noise, 0.0, 1.0)


def crop(img: np.ndarray, top: int, left: int, size: int) -> np.ndarray:
    return np.ascontiguousarray(img[..., top : top + size, left : left + size])


# -- seeded sample pipelines ----------------------------------------------


@dataclass
class AugmentConfig:
    crop_scale: tuple[float, float] = (0.6, 1.0)
    p_flip: float = 0.5
    p_rot: float = 0.5
    brightness: tuple[float, float] = (0.9, 1.1)
    gamma: tuple[float, float] = (0.8, 1.25)
    noise_strength: float = 0.03
    geometric: bool = True
    photometric: bool = True


def sample_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for one (seed, epoch, index, ...) stream.

    Streams are independent of worker layout, so the number of data
    workers never changes the drawn values.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *stream])))


def random_crop_window(rng: np.random.Generator, in_size: int, scale: tuple[float, float],
                       min_size: int) -> tuple[int, int, int]:
    """(top, left, side) of a random square crop window."""
    lo = max(min_size, int(round(in_size * scale[0])))
    hi = max(lo, int(round(in_size * scale[1])))
    side = int(rng.integers(lo, hi + 1))
    side = min(side, in_size)
    top = int(rng.integers(0, in_size - side + 1))
    left = int(rng.integers(0, in_size - side + 1))
    return top, left, side


def random_resized_crop(arrays: list[tuple[np.ndarray, str]], rng: np.random.Generator,
                        out_size: int, scale: tuple[float, float]) -> list[np.ndarray]:
    """One crop window applied to all arrays; per-array interpolation.

    Each entry is (array, kind) with kind "bilinear" or "nearest".
    """
    in_size = arrays[0][0].shape[-1]
    top, left, side = random_crop_window(rng, in_size, scale, min_size=8)
    out = []
    for arr, kind in arrays:
        c = crop(arr, top, left, side)
        if side == out_size:
            out.append(c)
        elif kind == "nearest":
            out.append(resize_nearest(c, (out_size, out_size)))
        else:
            out.append(resize_bilinear(c, (out_size, out_size)))
    return out


def random_flips(arrays: list[np.ndarray], rng: np.random.Generator, p: float) -> list[np.ndarray]:
    if rng.random() < p:
        arrays = [flip_h(a) for a in arrays]
    if rng.random() < p:
        arrays = [flip_v(a) for a in arrays]
    return arrays


def random_rot90(arrays: list[np.ndarray], rng: np.random.Generator, p: float) -> list[np.ndarray]:
    if rng.random() < p:
        k = int(rng.integers(1, 4))
        arrays = [rot90k(a, k) for a in arrays]
    return arrays


def augment_pair(sar: np.ndarray, optical: np.ndarray, rng: np.random.Generator,
                 out_size: int, cfg: AugmentConfig) -> tuple[np.ndarray, np.ndarray]:
    """Pretraining augmentation: random resized crop + flips, applied
    with one geometry to the radar input and its optical target."""
    if cfg.geometric:
        sar, optical = random_resized_crop(
            [(sar, "bilinear"), (optical, "bilinear")], rng, out_size, cfg.crop_scale
        )
        sar, optical = random_flips([sar, optical], rng, cfg.p_flip)
    else:
        sar = resize_bilinear(sar, (out_size, out_size))
        optical = resize_bilinear(optical, (out_size, out_size))
    return sar, optical


def augment_zone_sample(sar: np.ndarray, zones: np.ndarray, rng: np.random.Generator,
                        out_size: int, cfg: AugmentConfig) -> tuple[np.ndarray, np.ndarray]:
    """Fine-tuning augmentation.

    Geometry (crop, flips, right-angle rotations) moves radar and label
    grid together; brightness, gamma and Poisson noise touch only the
    radar. Labels stay in {0..3} because they only ever move by
    nearest-neighbour lookup.
    """
    if cfg.geometric:
        sar, zones = random_resized_crop(
            [(sar, "bilinear"), (zones, "nearest")], rng, out_size, cfg.crop_scale
        )
        sar, zones = random_flips([sar, zones], rng, cfg.p_flip)
        sar, zones = random_rot90([sar, zones], rng, cfg.p_rot)
    else:
        sar = resize_bilinear(sar, (out_size, out_size))
        zones = resize_nearest(zones, (out_size, out_size))
    if cfg.photometric:
        sar = adjust_brightness(sar, float(rng.uniform(*cfg.brightness)))
        sar = adjust_gamma(sar, float(rng.uniform(*cfg.gamma)))
        sar = add_poisson_noise(sar, cfg.noise_strength, rng)
    return sar, zones
