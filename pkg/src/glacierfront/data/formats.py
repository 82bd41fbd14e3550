"""On-disk scene formats.

Dataset layout (one directory per glacier):

    dataset/<glacier>/sar/<date>_<sensor>.png      16-bit grayscale
    dataset/<glacier>/sar/<date>_<sensor>.meta     UTF-8 "key: value" sidecar
    dataset/<glacier>/optical/channel_00.png ...   one 16-bit file per channel
    dataset/<glacier>/optical/manifest.meta        channel count + scaling
    dataset/<glacier>/zones/<date>_<sensor>.png    8-bit {0,64,127,254}
    dataset/<glacier>/fronts/<date>_<sensor>.png   8-bit {0,255}

Radar intensities are stored as uint16 counts of 1/65535; loading
returns floats in [0, 1] and save(load(x)) reproduces the file byte
for byte. Sidecars keep unknown keys and their order.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import DataError
from ..postprocess import BBox, decode_zone_raster, encode_zone_raster

SENSOR_TAGS = {"S1", "ENVISAT", "ERS", "PALSAR", "TSX"}

OPTICAL_CHANNELS = 14
SCL_CHANNEL = 13  # categorical scene-classification channel


def register_sensor(tag: str) -> None:
    SENSOR_TAGS.add(tag)


@dataclass
class SceneMeta:
    glacier: str
    date: str
    sensor: str
    resolution: float
    orbit: str = "ascending"
    bbox: BBox | None = None
    extra: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.resolution <= 0:
            raise DataError(f"resolution must be positive, got {self.resolution}")
        try:
            _dt.date.fromisoformat(self.date)
        except ValueError as err:
            raise DataError(f"date '{self.date}' is not ISO-8601") from err
        if self.sensor not in SENSOR_TAGS:
            raise DataError(
                f"sensor '{self.sensor}' is not registered (known: {sorted(SENSOR_TAGS)})"
            )

    def stem(self) -> str:
        return f"{self.date}_{self.sensor}"


# -- sidecars ---------------------------------------------------------------


def write_sidecar(path: Path, mapping: dict[str, str]) -> None:
    lines = [f"{k}: {v}\n" for k, v in mapping.items()]
    Path(path).write_text("".join(lines), encoding="utf-8")


def read_sidecar(path: Path) -> dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing sidecar: {path}")
    out: dict[str, str] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        if ":" not in line:
            raise DataError(f"malformed sidecar line in {path}: {line!r}")
        key, value = line.split(":", 1)
        out[key.strip()] = value.strip()
    return out


def _meta_to_mapping(meta: SceneMeta) -> dict[str, str]:
    mapping = {
        "glacier": meta.glacier,
        "date": meta.date,
        "sensor": meta.sensor,
        "resolution": repr(meta.resolution),
        "orbit": meta.orbit,
    }
    if meta.bbox is not None:
        mapping["bbox"] = " ".join(str(v) for v in meta.bbox.as_tuple())
    mapping.update(meta.extra)
    return mapping


def _mapping_to_meta(mapping: dict[str, str], path: Path) -> SceneMeta:
    try:
        known = {"glacier", "date", "sensor", "resolution", "orbit", "bbox"}
        bbox = None
        if "bbox" in mapping:
            vals = [int(v) for v in mapping["bbox"].split()]
            bbox = BBox(*vals)
        return SceneMeta(
            glacier=mapping["glacier"],
            date=mapping["date"],
            sensor=mapping["sensor"],
            resolution=float(mapping["resolution"]),
            orbit=mapping.get("orbit", "ascending"),
            bbox=bbox,
            extra={k: v for k, v in mapping.items() if k not in known},
        )
    except KeyError as err:
        raise DataError(f"sidecar {path} lacks required key {err}") from err


# -- rasters ----------------------------------------------------------------


def save_raster16(path: Path, arr: np.ndarray) -> None:
    if arr.dtype != np.uint16:
        raise DataError(f"16-bit raster expects uint16, got {arr.dtype}")
    Image.fromarray(arr, mode="I;16").save(Path(path), format="PNG")


def load_raster16(path: Path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing raster: {path}")
    arr = np.asarray(Image.open(path))
    return arr.astype(np.uint16)


def save_raster8(path: Path, arr: np.ndarray) -> None:
    if arr.dtype != np.uint8:
        raise DataError(f"8-bit raster expects uint8, got {arr.dtype}")
    Image.fromarray(arr, mode="L").save(Path(path), format="PNG")


def load_raster8(path: Path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing raster: {path}")
    return np.asarray(Image.open(path)).astype(np.uint8)


# -- scenes -----------------------------------------------------------------


def save_scene(directory: Path, sar: np.ndarray, meta: SceneMeta) -> Path:
    """Quantise a [0,1] radar image to uint16 and write raster + sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    raw = np.clip(np.round(sar * 65535.0), 0, 65535).astype(np.uint16)
    png = directory / f"{meta.stem()}.png"
    save_raster16(png, raw)
    write_sidecar(directory / f"{meta.stem()}.meta", _meta_to_mapping(meta))
    return png


def load_scene(png_path: Path) -> tuple[np.ndarray, SceneMeta]:
    png_path = Path(png_path)
    raw = load_raster16(png_path)
    mapping = read_sidecar(png_path.with_suffix(".meta"))
    meta = _mapping_to_meta(mapping, png_path.with_suffix(".meta"))
    return raw.astype(np.float64) / 65535.0, meta


def save_zone_mask(path: Path, zones: np.ndarray) -> None:
    save_raster8(Path(path), encode_zone_raster(zones))


def load_zone_mask(path: Path) -> np.ndarray:
    try:
        return decode_zone_raster(load_raster8(path))
    except Exception as err:
        raise DataError(f"invalid zone raster {path}: {err}") from err


def save_front_mask(path: Path, front: np.ndarray) -> None:
    save_raster8(Path(path), np.where(front, 255, 0).astype(np.uint8))


def load_front_mask(path: Path) -> np.ndarray:
    arr = load_raster8(path)
    bad = set(np.unique(arr)) - {0, 255}
    if bad:
        raise DataError(f"front raster {path} has values other than 0/255: {sorted(bad)}")
    return arr == 255


def save_optical(directory: Path, optical: np.ndarray, glacier: str) -> None:
    """Write a (14,H,W) float stack as per-channel uint16 + manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if optical.shape[0] != OPTICAL_CHANNELS:
        raise DataError(f"optical stack must have {OPTICAL_CHANNELS} channels, got {optical.shape}")
    manifest = {"glacier": glacier, "channels": str(OPTICAL_CHANNELS)}
    for ch in range(OPTICAL_CHANNELS):
        band = optical[ch]
        lo, hi = float(band.min()), float(band.max())
        scale = (hi - lo) or 1.0
        raw = np.round((band - lo) / scale * 65535.0).astype(np.uint16)
        save_raster16(directory / f"channel_{ch:02d}.png", raw)
        manifest[f"channel_{ch:02d}_min"] = repr(lo)
        manifest[f"channel_{ch:02d}_max"] = repr(hi)
    write_sidecar(directory / "manifest.meta", manifest)


def load_optical(directory: Path) -> np.ndarray:
    directory = Path(directory)
    manifest = read_sidecar(directory / "manifest.meta")
    n = int(manifest.get("channels", OPTICAL_CHANNELS))
    if n != OPTICAL_CHANNELS:
        raise DataError(f"optical manifest in {directory} declares {n} channels")
    bands = []
    for ch in range(n):
        raw = load_raster16(directory / f"channel_{ch:02d}.png").astype(np.float64)
        lo = float(manifest[f"channel_{ch:02d}_min"])
        hi = float(manifest[f"channel_{ch:02d}_max"])
        bands.append(raw / 65535.0 * ((hi - lo) or 1.0) + lo)
    return np.stack(bands)


# -- dataset objects ---------------------------------------------------------


@dataclass
class SceneRecord:
    sar: np.ndarray
    meta: SceneMeta
    zones: np.ndarray | None = None
    front: np.ndarray | None = None


@dataclass
class GlacierSeries:
    """All radar scenes of one glacier plus its single optical target."""

    glacier: str
    scenes: list[SceneRecord]
    optical: np.ndarray

    def __post_init__(self):
        shapes = {s.sar.shape for s in self.scenes}
        if len(shapes) > 1:
            raise DataError(f"glacier '{self.glacier}' mixes raster shapes: {shapes}")
        if self.scenes and self.optical.shape[-2:] != self.scenes[0].sar.shape:
            raise DataError(
                f"glacier '{self.glacier}' optical target shape {self.optical.shape[-2:]} "
                f"does not match scenes {self.scenes[0].sar.shape}"
            )

    def sorted_by_date(self) -> list[SceneRecord]:
        return sorted(self.scenes, key=lambda s: (s.meta.date, s.meta.sensor))


def load_dataset(root: Path, with_labels: bool = True) -> list[GlacierSeries]:
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset root does not exist: {root}")
    series = []
    for gdir in sorted(p for p in root.iterdir() if p.is_dir()):
        sar_dir = gdir / "sar"
        if not sar_dir.is_dir():
            raise DataError(f"glacier directory {gdir} lacks sar/")
        scenes = []
        for png in sorted(sar_dir.glob("*.png")):
            sar, meta = load_scene(png)
            zones = front = None
            if with_labels:
                zpath = gdir / "zones" / png.name
                fpath = gdir / "fronts" / png.name
                zones = load_zone_mask(zpath) if zpath.exists() else None
                front = load_front_mask(fpath) if fpath.exists() else None
            scenes.append(SceneRecord(sar=sar, meta=meta, zones=zones, front=front))
        if not scenes:
            raise DataError(f"glacier directory {gdir} has no scenes")
        optical = load_optical(gdir / "optical")
        series.append(GlacierSeries(glacier=gdir.name, scenes=scenes, optical=optical))
    if not series:
        raise DataError(f"no glacier directories under {root}")
    return series


def validate_dataset(root: Path) -> list[str]:
    """Best-effort structural validation; returns human-readable issues.

    The generator's output must come back clean, and the same checks
    run on ingested external data.
    """
    issues: list[str] = []
    root = Path(root)
    if not root.is_dir():
        return [f"dataset root missing: {root}"]
    glaciers = [p for p in sorted(root.iterdir()) if p.is_dir()]
    if not glaciers:
        issues.append("no glacier directories")
    for gdir in glaciers:
        pngs = sorted((gdir / "sar").glob("*.png")) if (gdir / "sar").is_dir() else []
        if not pngs:
            issues.append(f"{gdir.name}: no sar scenes")
        for png in pngs:
            if not png.with_suffix(".meta").exists():
                issues.append(f"{gdir.name}: missing sidecar for {png.name}")
                continue
            try:
                _, meta = load_scene(png)
            except DataError as err:
                issues.append(f"{gdir.name}: {err}")
                continue
            if meta.glacier != gdir.name:
                issues.append(f"{gdir.name}: sidecar names glacier '{meta.glacier}'")
        if not (gdir / "optical" / "manifest.meta").exists():
            issues.append(f"{gdir.name}: missing optical manifest")
        else:
            try:
                load_optical(gdir / "optical")
            except DataError as err:
                issues.append(f"{gdir.name}: {err}")
        for sub in ("zones", "fronts"):
            d = gdir / sub
            if d.is_dir():
                for png in sorted(d.glob("*.png")):
                    try:
                        if sub == "zones":
                            load_zone_mask(png)
                        else:
                            load_front_mask(png)
                    except DataError as err:
                        issues.append(f"{gdir.name}: {err}")
    return issues
