"""Differentiable primitives used by the PSRN streams.

All operations accept arbitrary leading (batch) dimensions unless noted and
broadcast like numpy. Gradients of broadcast operands are summed back to the
operand's shape.
"""

import numpy as np

from .tensor import DimensionError, Tensor, as_tensor, make_node


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def _backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(g, b.shape))

    return make_node(a.values + b.values, (a, b), _backward)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def _backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(-g, b.shape))

    return make_node(a.values - b.values, (a, b), _backward)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def _backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g * b.values, a.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(g * a.values, b.shape))

    return make_node(a.values * b.values, (a, b), _backward)


def affine(x, weights, bias=None):
    """``weights @ x + bias`` over the last axis of ``x``.

    ``weights`` has shape (n_out, n_in) and ``bias`` (n_out,).
    """
    x, weights = as_tensor(x), as_tensor(weights)
    if weights.values.ndim != 2:
        raise DimensionError(f"affine: weights must be 2-D, got shape {weights.shape}")
    n_out, n_in = weights.shape
    if x.values.ndim == 0 or x.shape[-1] != n_in:
        raise DimensionError(
            f"affine: input last dim {x.shape[-1:] or ()} does not match weights {weights.shape}"
        )
    parents = (x, weights)
    out = x.values @ weights.values.T
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (n_out,):
            raise DimensionError(f"affine: bias shape {bias.shape} does not match weights {weights.shape}")
        out = out + bias.values
        parents = (x, weights, bias)

    def _backward(g):
        if x.requires_grad:
            x.accumulate(g @ weights.values)
        if weights.requires_grad:
            weights.accumulate(g.reshape(-1, n_out).T @ x.values.reshape(-1, n_in))
        if bias is not None and bias.requires_grad:
            bias.accumulate(g.reshape(-1, n_out).sum(axis=0))

    return make_node(out, parents, _backward)


def sigmoid(x):
    x = as_tensor(x)
    # split branches keep exp() from overflowing for large |x|
    v = x.values
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)

    def _backward(g):
        x.accumulate(g * out * (1.0 - out))

    return make_node(out, (x,), _backward)


def tanh(x):
    x = as_tensor(x)
    out = np.tanh(x.values)

    def _backward(g):
        x.accumulate(g * (1.0 - out * out))

    return make_node(out, (x,), _backward)


def relu(x):
    x = as_tensor(x)
    mask = x.values > 0
    out = np.where(mask, x.values, 0.0)

    def _backward(g):
        x.accumulate(g * mask)

    return make_node(out, (x,), _backward)


_ACTIVATIONS = {"sigmoid": sigmoid, "tanh": tanh, "relu": relu}


def activation(x, kind):
    try:
        fn = _ACTIVATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}; expected one of {sorted(_ACTIVATIONS)}") from None
    return fn(x)


def _softmax_values(v, axis=-1):
    z = v - v.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def softmax(x, axis=-1):
    x = as_tensor(x)
    out = _softmax_values(x.values, axis)

    def _backward(g):
        x.accumulate(out * (g - (g * out).sum(axis=axis, keepdims=True)))

    return make_node(out, (x,), _backward)


def cross_entropy(logits, labels, reduction="mean"):
    """Negative log-likelihood of ``labels`` under ``softmax(logits)``.

    ``logits`` is (C,) with an integer label, or (B, C) with B labels. For a
    batch the per-sample losses are averaged (``reduction="mean"``) or summed.
    """
    logits = as_tensor(logits)
    v = logits.values
    single = v.ndim == 1
    v2 = v[None, :] if single else v
    labels = np.atleast_1d(np.asarray(labels))
    n_classes = v2.shape[-1]
    if labels.shape[0] != v2.shape[0]:
        raise DimensionError(f"cross_entropy: {labels.shape[0]} labels for {v2.shape[0]} rows")
    if not np.issubdtype(labels.dtype, np.integer):
        raise IndexError(f"cross_entropy: labels must be integers, got {labels.dtype}")
    if np.any(labels < 0) or np.any(labels >= n_classes):
        raise IndexError(f"cross_entropy: label out of range [0, {n_classes})")

    z = v2 - v2.max(axis=-1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=-1))
    rows = np.arange(v2.shape[0])
    per_sample = log_norm - z[rows, labels]
    scale = 1.0 / v2.shape[0] if reduction == "mean" else 1.0
    loss = per_sample.sum() * scale

    def _backward(g):
        d = np.exp(z - log_norm[:, None])
        d[rows, labels] -= 1.0
        d *= g * scale
        logits.accumulate(d[0] if single else d)

    return make_node(np.asarray(loss), (logits,), _backward)


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    out = np.concatenate([t.values for t in tensors], axis=axis)
    sizes = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def _backward(g):
        for t, piece in zip(tensors, np.split(g, sizes, axis=axis)):
            if t.requires_grad:
                t.accumulate(piece)

    return make_node(out, tuple(tensors), _backward)


def stack(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    out = np.stack([t.values for t in tensors], axis=axis)

    def _backward(g):
        for i, t in enumerate(tensors):
            if t.requires_grad:
                t.accumulate(np.take(g, i, axis=axis))

    return make_node(out, tuple(tensors), _backward)


def index(x, idx):
    """Basic numpy indexing (ints and slices) with a scatter backward."""
    x = as_tensor(x)
    out = x.values[idx]

    def _backward(g):
        full = np.zeros_like(x.values)
        full[idx] += g
        x.accumulate(full)

    return make_node(np.array(out, copy=True), (x,), _backward)


def split_last(x, n):
    """Split the last axis into ``n`` equal pieces."""
    x = as_tensor(x)
    size = x.shape[-1]
    if size % n:
        raise DimensionError(f"split_last: last dim {size} not divisible by {n}")
    k = size // n
    return [index(x, (Ellipsis, slice(i * k, (i + 1) * k))) for i in range(n)]


def reduce_sum(x, axis=None):
    x = as_tensor(x)
    out = x.values.sum(axis=axis)

    def _backward(g):
        if axis is None:
            x.accumulate(np.broadcast_to(g, x.shape))
        else:
            x.accumulate(np.broadcast_to(np.expand_dims(g, axis), x.shape))

    return make_node(out, (x,), _backward)


def reduce_mean(x, axis=None):
    x = as_tensor(x)
    count = x.size if axis is None else x.shape[axis]
    return mul(reduce_sum(x, axis), 1.0 / count)


def broadcast_to(x, shape):
    x = as_tensor(x)
    out = np.broadcast_to(x.values, shape).copy()

    def _backward(g):
        x.accumulate(_unbroadcast(g, x.shape))

    return make_node(out, (x,), _backward)


def expand_dims(x, axis):
    x = as_tensor(x)
    return reshape(x, np.expand_dims(x.values, axis).shape)


def reshape(x, shape):
    x = as_tensor(x)
    out = x.values.reshape(shape)

    def _backward(g):
        x.accumulate(g.reshape(x.shape))

    return make_node(out.copy(), (x,), _backward)


def weighted_sum(items, weights):
    """Sum over the second-to-last axis of ``items`` weighted by ``weights``.

    ``items`` is (..., N, F), ``weights`` is (..., N); result is (..., F).
    """
    items, weights = as_tensor(items), as_tensor(weights)
    if items.shape[:-1] != weights.shape:
        raise DimensionError(f"weighted_sum: items {items.shape} vs weights {weights.shape}")
    out = np.einsum("...n,...nf->...f", weights.values, items.values)

    def _backward(g):
        if items.requires_grad:
            items.accumulate(weights.values[..., :, None] * g[..., None, :])
        if weights.requires_grad:
            weights.accumulate(np.einsum("...f,...nf->...n", g, items.values))

    return make_node(out, (items, weights), _backward)


def mean_of(tensors):
    """Elementwise mean of equally shaped tensors."""
    tensors = list(tensors)
    if not tensors:
        raise ValueError("mean_of: need at least one tensor")
    return reduce_mean(stack(tensors, axis=0), axis=0)


def _im2col(x, k):
    # x: (B, H, W, C) already padded; returns (B, H-k+1, W-k+1, k*k*C)
    B, H, W, C = x.shape
    Ho, Wo = H - k + 1, W - k + 1
    cols = np.empty((B, Ho, Wo, k, k, C))
    for di in range(k):
        for dj in range(k):
            cols[:, :, :, di, dj, :] = x[:, di:di + Ho, dj:dj + Wo, :]
    return cols.reshape(B, Ho, Wo, k * k * C)


def conv2d(x, weights, bias):
    """Stride-1 'same' convolution on channel-last rasters.

    ``x`` is (B, H, W, C_in), ``weights`` (C_out, k, k, C_in) with odd k,
    ``bias`` (C_out,).
    """
    x, weights, bias = as_tensor(x), as_tensor(weights), as_tensor(bias)
    c_out, k, k2, c_in = weights.shape
    if k != k2 or k % 2 == 0:
        raise DimensionError(f"conv2d: kernel must be square and odd, got {weights.shape}")
    if x.values.ndim != 4 or x.shape[-1] != c_in:
        raise DimensionError(f"conv2d: input {x.shape} does not match kernel {weights.shape}")
    p = k // 2
    B, H, W, _ = x.shape
    xp = np.pad(x.values, ((0, 0), (p, p), (p, p), (0, 0)))
    cols = _im2col(xp, k)
    wmat = weights.values.reshape(c_out, -1)
    out = cols @ wmat.T + bias.values

    def _backward(g):
        if weights.requires_grad:
            weights.accumulate((g.reshape(-1, c_out).T @ cols.reshape(-1, k * k * c_in)).reshape(weights.shape))
        if bias.requires_grad:
            bias.accumulate(g.reshape(-1, c_out).sum(axis=0))
        if x.requires_grad:
            dcols = (g @ wmat).reshape(B, H, W, k, k, c_in)
            dxp = np.zeros_like(xp)
            for di in range(k):
                for dj in range(k):
                    dxp[:, di:di + H, dj:dj + W, :] += dcols[:, :, :, di, dj, :]
            x.accumulate(dxp[:, p:p + H, p:p + W, :])

    return make_node(out, (x, weights, bias), _backward)


def avg_pool2d(x, size):
    """Non-overlapping ``size`` x ``size`` average pooling on (B, H, W, C)."""
    x = as_tensor(x)
    B, H, W, C = x.shape
    if H % size or W % size:
        raise DimensionError(f"avg_pool2d: spatial dims {(H, W)} not divisible by {size}")
    out = x.values.reshape(B, H // size, size, W // size, size, C).mean(axis=(2, 4))

    def _backward(g):
        up = np.repeat(np.repeat(g, size, axis=1), size, axis=2) / (size * size)
        x.accumulate(up)

    return make_node(out, (x,), _backward)


def sum_squares(tensors):
    """Plain float sum of squared entries (no graph)."""
    return float(sum(np.sum(t.values * t.values) for t in tensors))


def values_of(x):
    return x.values if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
