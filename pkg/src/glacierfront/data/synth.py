"""Synthetic glacier scenes.

Each scene partitions the canvas into the four landscape zones with a
sinusoidal glacier/ocean front, rock margins along the top and bottom,
and an optional no-information band on the glacier side. The radar
channel is a per-class base intensity under multiplicative speckle;
the optical target is a stack of smooth per-class channel signatures.
The ground-truth front is, by construction, exactly the extracted
ocean/glacier boundary restricted to the bounding box.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..model.config import GLACIER, NOINFO, OCEAN, ROCK
from ..postprocess import BBox, extract_front, mask_bbox
from .formats import (
    SceneMeta,
    save_front_mask,
    save_optical,
    save_scene,
    save_zone_mask,
)

# desk-scale meters per pixel by sensor tag; chosen so synthetic fronts
# comfortably clear the 750 m minimum-length filter
SENSOR_RESOLUTION = {"S1": 20.0, "ENVISAT": 30.0, "ERS": 20.0, "PALSAR": 17.0, "TSX": 15.0}

# per-class radar backscatter levels (no-info, rock, glacier, ocean)
CLASS_LEVELS = (0.04, 0.62, 0.45, 0.15)


@dataclass
class SynthParams:
    seed: int = 0
    size: int = 96
    resolution: float = 20.0
    front_center: float = 0.55  # fraction of width
    amplitude: float = 6.0
    period: float = 48.0
    phase: float = 0.0
    rock_band: float = 0.12  # fraction of height at top and bottom
    noinfo_band: float = 0.08  # fraction of width on the left, 0 disables
    speckle: float = 0.25
    melange_prob: float = 0.0
    glacier: str = "g00"
    date: str = "2020-01-01"
    sensor: str = "S1"


@dataclass
class SynthScene:
    sar: np.ndarray
    optical: np.ndarray
    zones: np.ndarray
    front: np.ndarray
    bbox: BBox
    meta: SceneMeta


def _zone_layout(p: SynthParams) -> tuple[np.ndarray, BBox]:
    s = p.size
    rows = np.arange(s)
    front_col = p.front_center * s + p.amplitude * np.sin(
        2.0 * np.pi * rows / p.period + p.phase
    )
    front_col = np.clip(front_col, 4, s - 5)
    cols = np.arange(s)
    zones = np.where(cols[None, :] >= front_col[:, None], OCEAN, GLACIER).astype(np.uint8)
    band = max(2, int(round(p.rock_band * s)))
    zones[:band, :] = ROCK
    zones[-band:, :] = ROCK
    if p.noinfo_band > 0:
        zones[band:-band, : max(1, int(round(p.noinfo_band * s)))] = NOINFO
    margin = int(np.ceil(p.amplitude)) + 6
    bbox = BBox(
        min_row=band + 1,
        max_row=s - band - 2,
        min_col=int(np.floor(front_col.min())) - margin,
        max_col=int(np.ceil(front_col.max())) + margin,
    ).clip((s, s))
    return zones, bbox


def synth_scene(p: SynthParams) -> SynthScene:
    """One reproducible scene; identical parameters give identical bits."""
    if p.size < 16:
        raise ConfigError(f"synthetic canvas too small: {p.size}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([p.seed, p.size])))
    zones, bbox = _zone_layout(p)
    levels = np.array(CLASS_LEVELS)
    sar = levels[zones]
    if p.speckle > 0:
        looks = max(1.0, 1.0 / (p.speckle * p.speckle))
        sar = sar * rng.gamma(looks, 1.0 / looks, size=sar.shape)
    if p.melange_prob > 0 and rng.random() < p.melange_prob:
        # bright ice debris in the ocean near the front
        front = extract_front(zones)
        from scipy import ndimage

        near = ndimage.binary_dilation(front, iterations=6) & (zones == OCEAN)
        blob = rng.random(sar.shape) < 0.35
        sar = np.where(near & blob, sar + 0.25, sar)
    sar = np.clip(sar, 0.002, 0.998)
    # quantise exactly like the on-disk format so round trips are exact
    sar = np.round(sar * 65535.0) / 65535.0

    optical = _optical_stack(zones, p)
    front = mask_bbox(extract_front(zones), bbox)
    meta = SceneMeta(
        glacier=p.glacier, date=p.date, sensor=p.sensor,
        resolution=p.resolution, bbox=bbox,
    )
    return SynthScene(sar=sar, optical=optical, zones=zones, front=front, bbox=bbox, meta=meta)


def _optical_stack(zones: np.ndarray, p: SynthParams) -> np.ndarray:
    """14 channels: 12 smooth band signatures, water-vapour ramp, and a
    categorical classification channel."""
    s = zones.shape[0]
    yy, xx = np.meshgrid(np.linspace(0, 1, s), np.linspace(0, 1, s), indexing="ij")
    chans = []
    for ch in range(12):
        sig = np.array(
            [
                0.05 + 0.02 * np.sin(0.7 * ch),          # no-info
                0.35 + 0.25 * np.sin(1.3 * ch + 0.5),    # rock
                0.75 + 0.20 * np.sin(0.9 * ch + 2.0),    # glacier
                0.15 + 0.10 * np.sin(1.1 * ch + 4.0),    # ocean
            ]
        )
        ramp = 0.05 * np.sin(2 * np.pi * (yy + 0.3 * ch / 12.0)) + 0.05 * xx
        chans.append(sig[zones] + ramp)
    wvp = 0.4 + 0.2 * yy + 0.1 * np.sin(2 * np.pi * xx)
    chans.append(wvp)
    scl_codes = np.array([0.0, 5.0, 11.0, 6.0])  # categorical per class
    chans.append(scl_codes[zones])
    return np.stack(chans)


def make_synth_dataset(
    root: Path,
    n_glaciers: int = 14,
    scenes_per_glacier: int = 10,
    seed: int = 0,
    size: int = 96,
    speckle: float = 0.25,
    melange_prob: float = 0.2,
) -> dict:
    """Write a dataset tree mirroring the documented layout.

    Per glacier: a fixed front-geometry family with per-scene phase and
    position drift, monthly dates, sensors cycling through the
    registered tags (each with its own resolution), zone and front
    labels, and exactly one optical target rendered from the glacier's
    base geometry. Regeneration with the same seed is byte-identical.
    """
    root = Path(root)
    sensors = sorted(SENSOR_RESOLUTION)
    master = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 97])))
    n_scenes = 0
    for g in range(n_glaciers):
        grng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, g])))
        base = SynthParams(
            seed=int(master.integers(2**31)),
            size=size,
            front_center=float(grng.uniform(0.45, 0.65)),
            amplitude=float(grng.uniform(3.0, 0.09 * size)),
            period=float(grng.uniform(size / 3.0, size)),
            rock_band=float(grng.uniform(0.10, 0.16)),
            noinfo_band=float(grng.uniform(0.0, 0.10)),
            speckle=speckle,
            melange_prob=melange_prob,
            glacier=f"glacier{g:02d}",
        )
        gdir = root / base.glacier
        optical_ref = synth_scene(replace(base, speckle=0.0, melange_prob=0.0))
        save_optical(gdir / "optical", optical_ref.optical, base.glacier)
        for j in range(scenes_per_glacier):
            sensor = sensors[j % len(sensors)]
            date = _monthly_date(j)
            scene = synth_scene(
                replace(
                    base,
                    seed=base.seed + 1 + j,
                    phase=float(grng.uniform(0, 2 * np.pi)),
                    front_center=base.front_center + float(grng.uniform(-0.03, 0.03)),
                    resolution=SENSOR_RESOLUTION[sensor],
                    sensor=sensor,
                    date=date,
                )
            )
            save_scene(gdir / "sar", scene.sar, scene.meta)
            save_zone_mask(gdir / "zones" / f"{scene.meta.stem()}.png", scene.zones)
            save_front_mask(gdir / "fronts" / f"{scene.meta.stem()}.png", scene.front)
            n_scenes += 1
    return {"glaciers": n_glaciers, "scenes": n_scenes, "root": str(root), "size": size}


def _monthly_date(j: int) -> str:
    year = 2015 + j // 12
    month = j % 12 + 1
    return f"{year}-{month:02d}-01"
