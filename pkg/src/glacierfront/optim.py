"""Decoupled weight-decay Adam with cosine learning-rate decay."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


def cosine_lr(base_lr: float, step: int, total_steps: int, min_frac: float = 0.01) -> float:
    """Cosine decay from base_lr to min_frac * base_lr over total_steps."""
    if total_steps <= 0:
        return base_lr
    t = min(step, total_steps) / total_steps
    lo = base_lr * min_frac
    return lo + 0.5 * (base_lr - lo) * (1.0 + np.cos(np.pi * t))


class AdamW:
    """Adam with weight decay applied directly to the weights.

    Decay skips one-dimensional parameters (biases, norm gains, bias
    tables are 2-D but tiny; the usual heuristic). Parameter iteration
    is name-sorted, so stepping is deterministic.
    """

    def __init__(
        self,
        params: dict[str, Tensor],
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.01,
    ):
        self.params = dict(sorted(params.items()))
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self._m = {name: np.zeros_like(p.data) for name, p in self.params.items()}
        self._v = {name: np.zeros_like(p.data) for name, p in self.params.items()}

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def step(self, lr: float | None = None) -> None:
        lr = self.lr if lr is None else lr
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1**self.t
        bias2 = 1.0 - b2**self.t
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            if self.weight_decay and p.data.ndim > 1:
                p.data -= lr * self.weight_decay * p.data
            m = self._m[name]
            v = self._v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p.data -= lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)
