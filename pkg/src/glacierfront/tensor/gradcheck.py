"""Finite-difference verification of reverse-mode gradients."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericError
from .core import Tensor

REL_ERR_FLOOR = 1e-6


@dataclass
class GradCheckReport:
    """Outcome of a gradient check.

    max_rel_err is max over checked coordinates of
    |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
    """

    max_rel_err: float
    n_checked: int
    worst: tuple[str, tuple[int, ...]] | None = None
    per_tensor: dict[str, float] = field(default_factory=dict)

    def ok(self, tol: float) -> bool:
        return self.max_rel_err < tol


def _rel_err(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), REL_ERR_FLOOR)


def grad_check(f, x: Tensor, eps: float = 1e-5, samples: int | None = None, seed: int = 0) -> GradCheckReport:
    """Check df/dx of a deterministic scalar function against central differences.

    With `samples` set, only that many coordinates (seeded, without
    replacement) are probed; otherwise every coordinate is. Non-finite
    values anywhere raise NumericError.
    """
    return grad_check_params(lambda t: f(t["x"]), {"x": x}, eps=eps, samples=samples, seed=seed)


def grad_check_params(
    f,
    tensors: dict[str, Tensor],
    eps: float = 1e-5,
    samples: int | None = None,
    seed: int = 0,
) -> GradCheckReport:
    """Gradient check of a scalar function of several named tensors.

    Coordinates are pooled across tensors; with `samples`, a seeded
    subset is probed (used for composed-model checks where exhaustive
    differencing would be too slow).
    """
    for t in tensors.values():
        t.data = np.ascontiguousarray(t.data)  # in-place probing needs a real view
        t.requires_grad = True
        t.zero_grad()
    out = f(tensors)
    if out.size != 1:
        raise ValueError("grad_check requires a scalar-valued function")
    if not np.isfinite(out.data).all():
        raise NumericError("grad_check: function value is not finite")
    out.backward()
    analytic = {}
    for name, t in tensors.items():
        analytic[name] = np.zeros_like(t.data) if t.grad is None else t.grad.copy()

    coords: list[tuple[str, int]] = []
    for name, t in tensors.items():
        coords.extend((name, i) for i in range(t.size))
    if samples is not None and samples < len(coords):
        rng = np.random.Generator(np.random.PCG64(seed))
        picked = rng.choice(len(coords), size=samples, replace=False)
        coords = [coords[i] for i in sorted(picked)]

    max_err = 0.0
    worst = None
    per_tensor: dict[str, float] = {}
    for name, flat_idx in coords:
        t = tensors[name]
        base = t.data.reshape(-1)
        orig = base[flat_idx]
        base[flat_idx] = orig + eps
        hi = float(f(tensors).data)
        base[flat_idx] = orig - eps
        lo = float(f(tensors).data)
        base[flat_idx] = orig
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise NumericError(f"grad_check: non-finite value probing {name}[{flat_idx}]")
        numeric = (hi - lo) / (2.0 * eps)
        err = _rel_err(float(analytic[name].reshape(-1)[flat_idx]), numeric)
        per_tensor[name] = max(per_tensor.get(name, 0.0), err)
        if err > max_err:
            max_err = err
            worst = (name, np.unravel_index(flat_idx, t.data.shape))
    return GradCheckReport(max_rel_err=max_err, n_checked=len(coords), worst=worst, per_tensor=per_tensor)
