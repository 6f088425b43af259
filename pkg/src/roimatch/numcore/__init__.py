from .adam import AdamState, adam_step, zero_grad
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .tensor import (
    ContractError,
    NumericError,
    ShapeError,
    Tensor,
    add,
    clip,
    concat,
    div,
    dot,
    exp,
    matmul,
    mean,
    mul,
    no_grad,
    norm,
    normalize,
    relu,
    sigmoid,
    square,
    sub,
    sum_,
    transpose,
)
