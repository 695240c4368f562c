from .tensor import (
    ShapeError,
    Tape,
    Tensor,
    add,
    backward,
    clip,
    concat,
    conv1d,
    div,
    exp,
    gather_frames,
    gelu,
    index_select,
    layernorm,
    linear,
    log,
    matmul,
    moveaxis,
    mul,
    neg,
    reshape,
    softmax,
    sqrt,
    sub,
    tmean,
    tsum,
    view_linear,
)
from .optim import AdamState, adam_init, adam_step, zero_grads
from .gradcheck import finite_difference_check

__all__ = [
    "ShapeError", "Tape", "Tensor", "add", "backward", "clip", "concat",
    "conv1d", "div", "exp", "gather_frames", "gelu", "index_select",
    "layernorm", "linear", "log", "matmul", "moveaxis", "mul", "neg",
    "reshape", "softmax", "sqrt", "sub", "tmean", "tsum", "view_linear",
    "AdamState", "adam_init", "adam_step", "zero_grads",
    "finite_difference_check",
]
