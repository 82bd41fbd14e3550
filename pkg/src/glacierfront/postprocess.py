"""Deterministic zone-to-front pipeline.

Stages, in order: patch merging, per-pixel argmax, largest-ocean
retention with island filling, ocean/glacier boundary extraction,
bounding-box masking, minimum-length filtering. Every stage is a pure
function of its inputs.

Conventions fixed here (and relied on by the raster formats):

* class ids 0=no-info, 1=rock, 2=glacier, 3=ocean;
* connected components use 8-connectivity (ocean regions, front
  segments), boundary tests use 4-adjacency;
* argmax ties resolve to the highest class id, so ocean wins ties;
* front length is pixel count times resolution (an approximation of
  polyline arc length, monotone in component size).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ConfigError, CoverageError
from .model.config import GLACIER, NOINFO, OCEAN, ROCK

EIGHT = np.ones((3, 3), dtype=bool)
DEFAULT_MIN_FRONT_M = 750.0

ZONE_GRAY = {NOINFO: 0, ROCK: 64, GLACIER: 127, OCEAN: 254}
GRAY_ZONE = {v: k for k, v in ZONE_GRAY.items()}


@dataclass
class BBox:
    """Inclusive pixel bounds of the region of interest."""

    min_row: int
    max_row: int
    min_col: int
    max_col: int

    def __post_init__(self):
        if self.min_row > self.max_row or self.min_col > self.max_col:
            raise ConfigError(f"degenerate bbox: {self}")

    def clip(self, hw: tuple[int, int]) -> "BBox":
        h, w = hw
        return BBox(
            max(0, self.min_row), min(h - 1, self.max_row),
            max(0, self.min_col), min(w - 1, self.max_col),
        )

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.min_row, self.max_row, self.min_col, self.max_col)


@dataclass
class PipelineResult:
    zones: np.ndarray
    front: np.ndarray
    no_front: bool


def merge_patches(patches: list[tuple[np.ndarray, tuple[int, int]]],
                  canvas: tuple[int, int]) -> np.ndarray:
    """Mean of covering patches per pixel, renormalised to sum 1.

    Each entry is (confidence (C,h,w), (row, col) origin). Every canvas
    pixel must be covered by at least one patch.
    """
    if not patches:
        raise CoverageError("merge_patches: no patches supplied")
    h, w = canvas
    c = patches[0][0].shape[0]
    acc = np.zeros((c, h, w))
    cnt = np.zeros((h, w), dtype=np.int64)
    for conf, (r0, c0) in patches:
        ph, pw = conf.shape[1], conf.shape[2]
        if r0 < 0 or c0 < 0 or r0 + ph > h or c0 + pw > w:
            raise CoverageError(
                f"patch at ({r0},{c0}) of size {ph}x{pw} exceeds canvas {h}x{w}"
            )
        acc[:, r0 : r0 + ph, c0 : c0 + pw] += conf
        cnt[r0 : r0 + ph, c0 : c0 + pw] += 1
    if (cnt == 0).any():
        r, cpix = np.argwhere(cnt == 0)[0]
        raise CoverageError(f"canvas pixel ({r},{cpix}) not covered by any patch")
    mean = acc / cnt
    total = mean.sum(axis=0, keepdims=True)
    uniform = np.full_like(mean, 1.0 / c)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(total > 0, mean / np.where(total > 0, total, 1.0), uniform)
    return out


def argmax_zones(conf: np.ndarray) -> np.ndarray:
    """Per-pixel argmax over the class axis; ties go to the highest id."""
    c = conf.shape[0]
    flipped = conf[::-1]
    return (c - 1 - np.argmax(flipped, axis=0)).astype(np.uint8)


def largest_ocean_fill(zones: np.ndarray) -> np.ndarray:
    """Keep only the largest 8-connected ocean region; fill its holes.

    Smaller ocean components are relabelled glacier. Non-ocean regions
    (4-connected) that do not touch the image border are necessarily
    enclosed by the kept ocean and are relabelled ocean. Without any
    ocean pixel the input is returned unchanged (the downstream front
    is then empty).
    """
    out = zones.copy()
    ocean = zones == OCEAN
    labels, n = ndimage.label(ocean, structure=EIGHT)
    if n == 0:
        return out
    sizes = ndimage.sum_labels(np.ones_like(labels), labels, index=np.arange(1, n + 1))
    keep = 1 + int(np.argmax(sizes))  # ties: first (lowest) label
    out[ocean & (labels != keep)] = GLACIER

    hole_labels, hn = ndimage.label(out != OCEAN)  # 4-connectivity (default cross)
    if hn:
        border = np.zeros(out.shape, dtype=bool)
        border[0, :] = border[-1, :] = border[:, 0] = border[:, -1] = True
        touching = np.unique(hole_labels[border & (hole_labels > 0)])
        enclosed = np.setdiff1d(np.arange(1, hn + 1), touching)
        if enclosed.size:
            out[np.isin(hole_labels, enclosed)] = OCEAN
    return out


def extract_front(zones: np.ndarray) -> np.ndarray:
    """Ocean pixels 4-adjacent to at least one glacier pixel.

    Ocean/rock and ocean/no-info boundaries are not fronts.
    """
    ocean = zones == OCEAN
    glacier = zones == GLACIER
    near_glacier = np.zeros_like(glacier)
    near_glacier[1:, :] |= glacier[:-1, :]
    near_glacier[:-1, :] |= glacier[1:, :]
    near_glacier[:, 1:] |= glacier[:, :-1]
    near_glacier[:, :-1] |= glacier[:, 1:]
    return ocean & near_glacier


def mask_bbox(front: np.ndarray, bbox: BBox) -> np.ndarray:
    out = np.zeros_like(front)
    b = bbox.clip(front.shape)
    out[b.min_row : b.max_row + 1, b.min_col : b.max_col + 1] = front[
        b.min_row : b.max_row + 1, b.min_col : b.max_col + 1
    ]
    return out


def filter_short_fronts(front: np.ndarray, resolution: float,
                        min_len_m: float = DEFAULT_MIN_FRONT_M) -> np.ndarray:
    """Drop 8-connected front components shorter than min_len_m,
    measuring length as pixel count times resolution."""
    labels, n = ndimage.label(front, structure=EIGHT)
    if n == 0:
        return front.copy()
    out = front.copy()
    for comp in range(1, n + 1):
        mask = labels == comp
        if mask.sum() * resolution < min_len_m:
            out[mask] = False
    return out


def run_pipeline(patches: list[tuple[np.ndarray, tuple[int, int]]],
                 canvas: tuple[int, int], bbox: BBox, resolution: float,
                 min_front_m: float = DEFAULT_MIN_FRONT_M) -> PipelineResult:
    """The full chain; equals stepwise application of the stages."""
    conf = merge_patches(patches, canvas)
    zones = argmax_zones(conf)
    zones = largest_ocean_fill(zones)
    front = extract_front(zones)
    front = mask_bbox(front, bbox)
    front = filter_short_fronts(front, resolution, min_front_m)
    return PipelineResult(zones=zones, front=front, no_front=not bool(front.any()))


def encode_zone_raster(zones: np.ndarray) -> np.ndarray:
    """Class ids -> grayscale levels (0, 64, 127, 254)."""
    lut = np.zeros(4, dtype=np.uint8)
    for cls, gray in ZONE_GRAY.items():
        lut[cls] = gray
    return lut[zones]


def decode_zone_raster(gray: np.ndarray) -> np.ndarray:
    """Grayscale levels -> class ids; unknown values raise."""
    values = np.unique(gray)
    bad = [int(v) for v in values if int(v) not in GRAY_ZONE]
    if bad:
        raise ConfigError(f"zone raster contains unknown gray levels {bad}")
    out = np.zeros(gray.shape, dtype=np.uint8)
    for gray_value, cls in GRAY_ZONE.items():
        out[gray == gray_value] = cls
    return out
