from .core import (
    Tensor,
    concat,
    finite_checks,
    gelu,
    maximum,
    minimum,
    set_finite_checks,
    silu,
    take,
)
from .nn import (
    conv2d,
    group_norm,
    layer_norm,
    linear,
    log_softmax,
    nearest_upsample2x,
    relative_position_index,
    softmax,
    softmax_channel,
    to_nchw,
    to_nhwc,
    window_attention,
)
from .gradcheck import GradCheckReport, grad_check, grad_check_params
from .module import Module, parameter
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Tensor",
    "concat",
    "take",
    "maximum",
    "minimum",
    "gelu",
    "silu",
    "finite_checks",
    "set_finite_checks",
    "conv2d",
    "nearest_upsample2x",
    "softmax",
    "log_softmax",
    "softmax_channel",
    "linear",
    "layer_norm",
    "group_norm",
    "to_nchw",
    "to_nhwc",
    "window_attention",
    "relative_position_index",
    "grad_check",
    "grad_check_params",
    "GradCheckReport",
    "Module",
    "parameter",
    "load_checkpoint",
    "save_checkpoint",
]
