"""Dataset split rules."""

from __future__ import annotations

import warnings
import zlib

import numpy as np

from .formats import GlacierSeries, SceneRecord


def chronological_validation_split(
    series: GlacierSeries, val_count: int = 68
) -> tuple[list[SceneRecord], list[SceneRecord]]:
    """Pretraining split: the earliest `val_count` scenes of the glacier
    (by date) form the validation set, the rest train.

    Sorting happens first, so the result is independent of the input
    enumeration order. Series shorter than `val_count` become
    validation-only, with a warning.
    """
    ordered = series.sorted_by_date()
    if len(ordered) <= val_count:
        warnings.warn(
            f"glacier '{series.glacier}' has only {len(ordered)} scenes; "
            f"all go to validation, training split is empty",
            stacklevel=2,
        )
        return [], ordered
    return ordered[val_count:], ordered[:val_count]


def stratified_scene_split(
    records: list[tuple[str, SceneRecord]], val_frac: float = 0.1, seed: int = 0
) -> tuple[list[SceneRecord], list[SceneRecord]]:
    """Fine-tuning split: seeded 90/10 by whole scenes, stratified by
    glacier (at least one validation scene per glacier)."""
    by_glacier: dict[str, list[SceneRecord]] = {}
    for glacier, rec in records:
        by_glacier.setdefault(glacier, []).append(rec)
    train: list[SceneRecord] = []
    val: list[SceneRecord] = []
    for glacier in sorted(by_glacier):
        recs = sorted(by_glacier[glacier], key=lambda r: (r.meta.date, r.meta.sensor))
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, hash(glacier) & 0x7FFFFFFF])))
        order = rng.permutation(len(recs))
        k = max(1, int(round(val_frac * len(recs))))
        val_idx = set(int(i) for i in order[:k])
        for i, rec in enumerate(recs):
            (val if i in val_idx else train).append(rec)
    return train, val
