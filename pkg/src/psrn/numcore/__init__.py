"""Dense differentiable numerics: tensors, primitives, Adam, gradient checking."""

from .checkpoint import (
    CheckpointFormatError,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from .gradcheck import DeterminismError, grad_check, grad_check_detail
from .ops import (
    activation,
    add,
    affine,
    avg_pool2d,
    broadcast_to,
    concat,
    conv2d,
    cross_entropy,
    expand_dims,
    index,
    mean_of,
    mul,
    reduce_mean,
    reduce_sum,
    relu,
    reshape,
    sigmoid,
    softmax,
    split_last,
    stack,
    sub,
    sum_squares,
    tanh,
    weighted_sum,
)
from .optim import AdamState, ConsistencyError, adam_step
from .params import ConfigurationError, ParameterSet, glorot_uniform, init_mlp, mlp_forward
from .tensor import DimensionError, Tensor, backward
