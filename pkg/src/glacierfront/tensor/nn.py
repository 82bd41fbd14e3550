"""Differentiable building blocks layered on the core tensor ops.

Layout convention: the convolutional path works in NCHW, the attention
path in NHWC. Conversions are explicit (:func:`to_nhwc` /
:func:`to_nchw`) so the boundary between the two halves of the hybrid
is visible in calling code.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

from ..errors import ConfigError, ShapeError
from .core import Tensor, take

LOGIT_SCALE_MAX = float(np.log(100.0))


def conv2d(x: Tensor, k: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """2-D cross-correlation of NCHW input `x` with OCkhkw kernel `k`.

    Output height is (H + 2*padding - kh)/stride + 1 and the division
    must be exact. Both kernel extents must be odd. Differentiable in
    `x` and `k`.
    """
    if x.ndim != 4 or k.ndim != 4:
        raise ShapeError(f"conv2d expects 4-D input and kernel, got {x.shape} and {k.shape}")
    n, c, h, w = x.shape
    oc, kc, kh, kw = k.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise ShapeError(f"conv2d kernel extents must be odd, got kh={kh}, kw={kw}")
    if padding < 0:
        raise ShapeError(f"conv2d padding must be non-negative, got {padding}")
    if c != kc:
        raise ShapeError(
            f"conv2d channel mismatch: input axis 1 has {c} channels, kernel axis 1 has {kc}"
        )
    if (h + 2 * padding - kh) % stride != 0 or (w + 2 * padding - kw) % stride != 0:
        raise ShapeError(
            "conv2d output size is not integral: "
            f"H axis (H={h}, pad={padding}, kh={kh}, stride={stride}), "
            f"W axis (W={w}, pad={padding}, kw={kw}, stride={stride})"
        )
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (w + 2 * padding - kw) // stride + 1

    if padding:
        xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    else:
        xp = x.data
    sn, sc, sh, sw = xp.strides
    windows = as_strided(
        xp,
        shape=(n, c, kh, kw, ho, wo),
        strides=(sn, sc, sh, sw, sh * stride, sw * stride),
        writeable=False,
    )
    out = np.tensordot(windows, k.data, axes=([1, 2, 3], [1, 2, 3]))  # (N,Ho,Wo,O)
    out = np.ascontiguousarray(out.transpose(0, 3, 1, 2))

    kd = k.data
    x_shape = (n, c, h, w)

    def backward(g):
        gk = np.tensordot(g, windows, axes=([0, 2, 3], [0, 4, 5]))  # (O,C,kh,kw)
        gxp = np.zeros_like(xp)
        for u in range(kh):
            for v in range(kw):
                # each (u,v) writes a disjoint strided slab; += accumulates
                # across taps deterministically
                patch = np.einsum("noij,oc->ncij", g, kd[:, :, u, v])
                gxp[:, :, u : u + stride * ho : stride, v : v + stride * wo : stride] += patch
        if padding:
            gx = gxp[:, :, padding : padding + h, padding : padding + w]
        else:
            gx = gxp
        return np.ascontiguousarray(gx), gk

    return Tensor._from_op(out, (x, k), backward, "conv2d")


def nearest_upsample2x(x: Tensor) -> Tensor:
    """Nearest-neighbour 2x upsampling of an NCHW tensor.

    out[n,c,i,j] = x[n,c,i//2,j//2]; backward sums each input cell's
    four output gradients.
    """
    if x.ndim != 4:
        raise ShapeError(f"nearest_upsample2x expects NCHW, got {x.shape}")
    data = np.repeat(np.repeat(x.data, 2, axis=2), 2, axis=3)
    n, c, h, w = x.shape

    def backward(g):
        return (g.reshape(n, c, h, 2, w, 2).sum(axis=(3, 5)),)

    return Tensor._from_op(data, (x,), backward, "nearest_upsample2x")


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Numerically stabilised softmax along `axis` (max subtraction)."""
    m = x.data.max(axis=axis, keepdims=True)
    e = np.exp(x.data - m)
    data = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        dot = (g * data).sum(axis=axis, keepdims=True)
        return (data * (g - dot),)

    return Tensor._from_op(data, (x,), backward, "softmax")


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    m = x.data.max(axis=axis, keepdims=True)
    shifted = x.data - m
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    data = shifted - lse
    soft = np.exp(data)

    def backward(g):
        return (g - soft * g.sum(axis=axis, keepdims=True),)

    return Tensor._from_op(data, (x,), backward, "log_softmax")


def softmax_channel(x: Tensor) -> Tensor:
    """Per-pixel class probabilities for an NCHW logit map."""
    if x.ndim != 4:
        raise ShapeError(f"softmax_channel expects NCHW, got {x.shape}")
    return softmax(x, axis=1)


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    out = x @ w
    if b is not None:
        out = out + b
    return out


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalise the last axis to zero mean / unit variance, then affine."""
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    return xc / (var + eps).sqrt() * gain + bias


def group_norm(x: Tensor, groups: int, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Group normalisation over an NCHW tensor."""
    n, c, h, w = x.shape
    if c % groups != 0:
        raise ConfigError(f"group_norm: {c} channels not divisible by {groups} groups")
    g = x.reshape(n, groups, (c // groups) * h * w)
    mu = g.mean(axis=-1, keepdims=True)
    gc = g - mu
    var = (gc * gc).mean(axis=-1, keepdims=True)
    normed = (gc / (var + eps).sqrt()).reshape(n, c, h, w)
    return normed * gain.reshape(1, c, 1, 1) + bias.reshape(1, c, 1, 1)


def to_nhwc(x: Tensor) -> Tensor:
    return x.transpose(0, 2, 3, 1)


def to_nchw(x: Tensor) -> Tensor:
    return x.transpose(0, 3, 1, 2)


def relative_position_index(window: int) -> np.ndarray:
    """(T, T) index map into a (2*window-1)**2 bias table, T = window**2."""
    coords = np.stack(np.meshgrid(np.arange(window), np.arange(window), indexing="ij"))
    flat = coords.reshape(2, -1)
    rel = flat[:, :, None] - flat[:, None, :]
    rel = rel + (window - 1)
    return rel[0] * (2 * window - 1) + rel[1]


def window_attention(
    x: Tensor,
    window: int,
    heads: int,
    params: dict[str, Tensor],
    cosine: bool = False,
) -> Tensor:
    """Multi-head self-attention inside non-overlapping square windows.

    `x` is NHWC; H and W must be divisible by `window` and C by `heads`.
    `params` carries the projection weights ("w_qkv", "b_qkv", "w_out",
    "b_out") and optionally a learned relative-position bias table
    ("bias_table", shape ((2*window-1)**2, heads)).

    With ``cosine=True`` the scores are cosine similarities scaled by a
    per-head learned temperature ("logit_scale", clamped at log 100),
    the scaled-cosine variant of SwinV2-style attention. The default is
    plain scaled dot-product attention.
    """
    n, h, w, c = x.shape
    if h % window != 0 or w % window != 0:
        raise ConfigError(
            f"window_attention: spatial size {h}x{w} not divisible by window {window}"
        )
    if c % heads != 0:
        raise ConfigError(f"window_attention: {c} channels not divisible by {heads} heads")
    nh, nw = h // window, w // window
    t = window * window
    hd = c // heads

    tokens = (
        x.reshape(n, nh, window, nw, window, c)
        .transpose(0, 1, 3, 2, 4, 5)
        .reshape(n * nh * nw, t, c)
    )
    qkv = linear(tokens, params["w_qkv"], params.get("b_qkv"))
    q = qkv[:, :, 0 * c : 1 * c].reshape(-1, t, heads, hd).transpose(0, 2, 1, 3)
    k = qkv[:, :, 1 * c : 2 * c].reshape(-1, t, heads, hd).transpose(0, 2, 1, 3)
    v = qkv[:, :, 2 * c : 3 * c].reshape(-1, t, heads, hd).transpose(0, 2, 1, 3)

    if cosine:
        eps = 1e-12
        qn = q / ((q * q).sum(axis=-1, keepdims=True) + eps).sqrt()
        kn = k / ((k * k).sum(axis=-1, keepdims=True) + eps).sqrt()
        scale = params["logit_scale"]
        clamped = Tensor(np.full_like(scale.data, LOGIT_SCALE_MAX))
        from .core import minimum

        temp = minimum(scale, clamped).exp().reshape(1, heads, 1, 1)
        scores = (qn @ kn.transpose(0, 1, 3, 2)) * temp
    else:
        scores = (q @ k.transpose(0, 1, 3, 2)) * (1.0 / np.sqrt(hd))

    if "bias_table" in params:
        rel = relative_position_index(window)
        bias = take(params["bias_table"], rel.reshape(-1))
        bias = bias.reshape(t, t, heads).transpose(2, 0, 1)
        scores = scores + bias

    attn = softmax(scores, axis=-1)
    out = (attn @ v).transpose(0, 2, 1, 3).reshape(n * nh * nw, t, c)
    out = linear(out, params["w_out"], params.get("b_out"))
    return (
        out.reshape(n, nh, nw, window, window, c)
        .transpose(0, 1, 3, 2, 4, 5)
        .reshape(n, h, w, c)
    )
