"""Layers composing the hybrid network.

All layers are :class:`Module` subclasses whose parameters are drawn
from an explicit numpy Generator at construction, in attribute order,
so a (config, seed) pair fully determines the parameter vector.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, ShapeError
from ..tensor import (
    Module,
    Tensor,
    concat,
    conv2d,
    gelu,
    group_norm,
    layer_norm,
    linear,
    parameter,
    silu,
    window_attention,
)
from ..tensor.nn import LOGIT_SCALE_MAX

INIT_STD = 0.02


def _norm_groups(channels: int, target: int) -> int:
    """Largest divisor of `channels` that does not exceed `target`."""
    for g in range(min(target, channels), 0, -1):
        if channels % g == 0:
            return g
    return 1


class Linear(Module):
    def __init__(self, rng, d_in: int, d_out: int):
        self.w = parameter(rng.normal(scale=INIT_STD, size=(d_in, d_out)))
        self.b = parameter(np.zeros(d_out))

    def __call__(self, x: Tensor) -> Tensor:
        return linear(x, self.w, self.b)


class Conv2d(Module):
    def __init__(self, rng, c_in: int, c_out: int, kernel: int, stride: int = 1, padding: int = 0):
        self.stride = stride
        self.padding = padding
        self.w = parameter(rng.normal(scale=INIT_STD, size=(c_out, c_in, kernel, kernel)))
        self.b = parameter(np.zeros(c_out))

    def __call__(self, x: Tensor) -> Tensor:
        out = conv2d(x, self.w, stride=self.stride, padding=self.padding)
        return out + self.b.reshape(1, self.b.size, 1, 1)


class LayerNorm(Module):
    def __init__(self, dim: int):
        self.g = parameter(np.ones(dim))
        self.b = parameter(np.zeros(dim))

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.g, self.b)


class GroupNorm(Module):
    def __init__(self, channels: int, target_groups: int):
        self.groups = _norm_groups(channels, target_groups)
        self.g = parameter(np.ones(channels))
        self.b = parameter(np.zeros(channels))

    def __call__(self, x: Tensor) -> Tensor:
        return group_norm(x, self.groups, self.g, self.b)


class WindowAttentionLayer(Module):
    """Per-window multi-head attention with a learned relative-position
    bias table; optionally the scaled-cosine score variant."""

    def __init__(self, rng, dim: int, window: int, heads: int,
                 position_bias: bool = True, cosine: bool = False):
        self.window = window
        self.heads = heads
        self.cosine = cosine
        self.w_qkv = parameter(rng.normal(scale=INIT_STD, size=(dim, 3 * dim)))
        self.b_qkv = parameter(np.zeros(3 * dim))
        self.w_out = parameter(rng.normal(scale=INIT_STD, size=(dim, dim)))
        self.b_out = parameter(np.zeros(dim))
        self.bias_table = (
            parameter(np.zeros(((2 * window - 1) ** 2, heads))) if position_bias else None
        )
        self.logit_scale = (
            parameter(np.full(heads, np.log(10.0))) if cosine else None
        )

    def __call__(self, x: Tensor) -> Tensor:
        params = {"w_qkv": self.w_qkv, "b_qkv": self.b_qkv,
                  "w_out": self.w_out, "b_out": self.b_out}
        if self.bias_table is not None:
            params["bias_table"] = self.bias_table
        if self.cosine:
            params["logit_scale"] = self.logit_scale
        return window_attention(x, self.window, self.heads, params, cosine=self.cosine)


class Mlp(Module):
    def __init__(self, rng, dim: int, ratio: float):
        hidden = int(dim * ratio)
        self.fc1 = Linear(rng, dim, hidden)
        self.fc2 = Linear(rng, hidden, dim)

    def __call__(self, x: Tensor) -> Tensor:
        return self.fc2(gelu(self.fc1(x)))


class TransformerBlock(Module):
    """Windowed attention + MLP with post-sublayer normalisation,
    i.e. x + norm(f(x)), the residual arrangement of SwinV2-style
    blocks (the full continuous-position-bias machinery is reduced to
    a learned bias table at this scale)."""

    def __init__(self, rng, dim: int, window: int, heads: int, mlp_ratio: float,
                 position_bias: bool, cosine: bool):
        self.attn = WindowAttentionLayer(rng, dim, window, heads, position_bias, cosine)
        self.norm1 = LayerNorm(dim)
        self.mlp = Mlp(rng, dim, mlp_ratio)
        self.norm2 = LayerNorm(dim)

    def __call__(self, x: Tensor) -> Tensor:
        x = x + self.norm1(self.attn(x))
        x = x + self.norm2(self.mlp(x))
        return x


class PatchEmbed(Module):
    """Non-overlapping patch embedding: reshape + linear projection.

    Equivalent to a stride-p convolution but expressed without even
    kernel support; input NCHW, output NHWC tokens.
    """

    def __init__(self, rng, c_in: int, patch: int, dim: int):
        self.patch = patch
        self.proj = Linear(rng, c_in * patch * patch, dim)
        self.norm = LayerNorm(dim)

    def __call__(self, x: Tensor) -> Tensor:
        n, c, h, w = x.shape
        p = self.patch
        if h % p or w % p:
            raise ConfigError(f"input {h}x{w} not divisible by patch size {p}")
        t = (
            x.reshape(n, c, h // p, p, w // p, p)
            .transpose(0, 2, 4, 1, 3, 5)
            .reshape(n, h // p, w // p, c * p * p)
        )
        return self.norm(self.proj(t))


class PatchMerge(Module):
    """2x2 neighbourhood concat -> norm -> linear reduction (NHWC)."""

    def __init__(self, rng, dim_in: int, dim_out: int):
        self.norm = LayerNorm(4 * dim_in)
        self.proj = Linear(rng, 4 * dim_in, dim_out)

    def __call__(self, x: Tensor) -> Tensor:
        n, h, w, c = x.shape
        t = (
            x.reshape(n, h // 2, 2, w // 2, 2, c)
            .transpose(0, 1, 3, 2, 4, 5)
            .reshape(n, h // 2, w // 2, 4 * c)
        )
        return self.proj(self.norm(t))


class ResNetBlock(Module):
    """norm -> silu -> 3x3 conv, twice, plus additive skip.

    The skip is a 1x1 projection exactly when the channel count
    changes, identity otherwise.
    """

    def __init__(self, rng, c_in: int, c_out: int, norm_groups: int):
        self.norm1 = GroupNorm(c_in, norm_groups)
        self.conv1 = Conv2d(rng, c_in, c_out, kernel=3, padding=1)
        self.norm2 = GroupNorm(c_out, norm_groups)
        self.conv2 = Conv2d(rng, c_out, c_out, kernel=3, padding=1)
        self.skip = Conv2d(rng, c_in, c_out, kernel=1) if c_in != c_out else None

    def __call__(self, x: Tensor) -> Tensor:
        h = self.conv1(silu(self.norm1(x)))
        h = self.conv2(silu(self.norm2(h)))
        base = self.skip(x) if self.skip is not None else x
        return base + h


def replicate_channels(x: Tensor) -> Tensor:
    """Repeat a single-channel NCHW map three times along channels."""
    if x.ndim != 4 or x.shape[1] != 1:
        raise ShapeError(f"replicate_channels expects (N,1,H,W), got {x.shape}")
    return concat([x, x, x], axis=1)


def crop_inner(t, inner: int):
    """Centered spatial crop of the trailing two axes to inner x inner.

    Accepts a Tensor or a plain ndarray; the offset (S - inner)/2 must
    be integral (both sizes even, or equal).
    """
    size = t.shape[-1]
    if t.shape[-2] != size:
        raise ShapeError(f"crop_inner expects square trailing axes, got {t.shape}")
    if inner > size:
        raise ShapeError(f"inner size {inner} exceeds input size {size}")
    if (size - inner) % 2:
        raise ShapeError(f"crop offset ({size}-{inner})/2 is not integral")
    lo = (size - inner) // 2
    sl = (Ellipsis, slice(lo, lo + inner), slice(lo, lo + inner))
    if isinstance(t, Tensor):
        return t[sl]
    return np.ascontiguousarray(t[sl])
