"""Parameter containers with hierarchical naming."""

from __future__ import annotations

import numpy as np

from .core import Tensor


def parameter(data, dtype=np.float64) -> Tensor:
    return Tensor(data, requires_grad=True, dtype=dtype)


def _collect_value(name: str, value, out: dict[str, Tensor]) -> None:
    if isinstance(value, Tensor):
        if value.requires_grad:
            out[name] = value
    elif isinstance(value, Module):
        value._collect(name + ".", out)
    elif isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            _collect_value(f"{name}.{i}", item, out)


class Module:
    """Base class for layers; collects parameters by attribute walk.

    Attribute insertion order is preserved, so parameter naming and
    iteration order are deterministic for a fixed construction order.
    """

    def parameters(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        self._collect("", out)
        return out

    def _collect(self, prefix: str, out: dict[str, Tensor]) -> None:
        for name, value in vars(self).items():
            _collect_value(f"{prefix}{name}", value, out)

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters().values())

    def zero_grad(self) -> None:
        for p in self.parameters().values():
            p.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.parameters().items()}

    def load_state_dict(self, state: dict[str, np.ndarray], strict: bool = True) -> list[str]:
        """Copy arrays into matching parameters; returns names not loaded.

        With strict=True every parameter must be covered and every
        entry consumed. With strict=False the intersection is loaded,
        which is how pretraining checkpoints initialise fine-tuning.
        """
        params = self.parameters()
        missing = [n for n in params if n not in state]
        unexpected = [n for n in state if n not in params]
        if strict and (missing or unexpected):
            raise KeyError(f"state mismatch: missing={missing}, unexpected={unexpected}")
        for name, p in params.items():
            if name in state:
                arr = np.asarray(state[name], dtype=p.data.dtype)
                if arr.shape != p.data.shape:
                    raise KeyError(
                        f"shape mismatch for '{name}': checkpoint {arr.shape} vs model {p.data.shape}"
                    )
                p.data = arr.copy()
        return missing + unexpected
