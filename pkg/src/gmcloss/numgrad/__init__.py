"""Minimal reverse-mode autodiff engine, optimizer and schedule."""
from .gradcheck import GradientCheckError, check_params, finite_difference_check
from .optim import AdamState, adam_step, cosine_annealing_lr
from .tensor import (
    ShapeError,
    Tape,
    Tensor,
    add,
    as_tensor,
    backward,
    bias_add,
    concat,
    div,
    elementwise,
    erf,
    exp,
    log,
    matmul,
    mean,
    mul,
    neg,
    no_grad,
    permute,
    reduce,
    relu,
    reshape,
    softmax,
    sqrt,
    square,
    sub,
    sum_,
    take,
    tanh,
    transpose,
)

__all__ = [
    "AdamState", "GradientCheckError", "ShapeError", "Tape", "Tensor", "adam_step",
    "add", "as_tensor", "backward", "bias_add", "check_params", "concat",
    "cosine_annealing_lr", "div", "elementwise", "erf", "exp", "finite_difference_check",
    "log", "matmul", "mean", "mul", "neg", "no_grad", "permute", "reduce", "relu", "reshape",
    "softmax", "sqrt", "square", "sub", "sum_", "take", "tanh", "transpose",
]
