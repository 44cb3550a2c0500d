"""Temporal pose stream: part encoders, soft attention over persons, and the
position / velocity recurrent streams.

Tensors carry arbitrary leading batch dimensions; shapes below name only the
trailing ones.
"""

from dataclasses import dataclass

import numpy as np

from .numcore import (
    affine,
    concat,
    expand_dims,
    index,
    init_mlp,
    mean_of,
    mlp_forward,
    reduce_mean,
    sigmoid,
    softmax,
    split_last,
    tanh,
    weighted_sum,
)
from .numcore.params import ConfigurationError, glorot_uniform
from .numcore.tensor import Tensor, as_tensor
from .posedata.types import PART_NAMES


class SequenceLengthError(ValueError):
    pass


@dataclass
class StreamOutputs:
    h_pos: Tensor
    h_vel: Tensor
    alpha: np.ndarray  # (..., T, N)
    selected: list  # l_1 .. l_T


def init_lstm(params, prefix, n_in, d, rng):
    params.add(f"{prefix}.W", glorot_uniform(rng, 4 * d, d + n_in))
    params.add(f"{prefix}.b", np.zeros(4 * d))


def init_pose_stream(params, cfg, rng, prefix="pose"):
    K, d, A = cfg.part_width, cfg.hidden, cfg.attention_width
    for name, dim in zip(PART_NAMES, cfg.part_dims):
        init_mlp(params, f"{prefix}.enc.{name}", [dim, K, K], rng)
    rep = K * len(cfg.part_dims)
    if cfg.attention:
        params.add(f"{prefix}.att.WL", glorot_uniform(rng, A, rep))
        params.add(f"{prefix}.att.Wh", glorot_uniform(rng, A, d))
        params.add(f"{prefix}.att.b", np.zeros(A))
        params.add(f"{prefix}.att.v", glorot_uniform(rng, 1, A))
    directions = ("fwd", "bwd") if cfg.bidirectional else ("fwd",)
    for stream in ("pos", "vel"):
        for direction in directions:
            init_lstm(params, f"{prefix}.{stream}.{direction}", rep, d, rng)


def encode_parts(parts, params, prefix="pose", part_dims=None):
    """Per-part two-layer ReLU perceptrons, concatenated: five inputs -> (5K,)."""
    if len(parts) != len(PART_NAMES):
        raise ConfigurationError(f"expected {len(PART_NAMES)} part vectors, got {len(parts)}")
    outs = []
    for i, (name, x) in enumerate(zip(PART_NAMES, parts)):
        x = as_tensor(x)
        W0 = params[f"{prefix}.enc.{name}.0.W"]
        if x.shape[-1] != W0.shape[1] or (part_dims is not None and x.shape[-1] != part_dims[i]):
            raise ConfigurationError(f"part {name!r} has dim {x.shape[-1]}, encoder expects {W0.shape[1]}")
        outs.append(mlp_forward(x, params, f"{prefix}.enc.{name}", kind="relu", final_activation=True))
    return concat(outs, axis=-1)


def attention_scores(projected, h_prev, params, prefix="pose"):
    """Scores e_i from pre-projected pose terms (..., N, A) and h_prev (..., d)."""
    hp = affine(h_prev, params[f"{prefix}.att.Wh"])
    pre = tanh(projected + expand_dims(hp, -2) + params[f"{prefix}.att.b"])
    e = affine(pre, params[f"{prefix}.att.v"])
    return index(e, (Ellipsis, 0))


def attention_weights(L, h_prev, params, prefix="pose"):
    """Softmax over persons of v . tanh(W_L L_i + W_h h_prev + b); L is (..., N, 5K)."""
    projected = affine(L, params[f"{prefix}.att.WL"])
    return softmax(attention_scores(projected, h_prev, params, prefix), axis=-1)


def select_pose(L, alpha):
    """Attention-weighted sum over persons: (..., N, 5K), (..., N) -> (..., 5K)."""
    return weighted_sum(L, alpha)


def lstm_step(x, h_prev, c_prev, params, prefix):
    """One cell update; the gate map acts on the concatenation (h_prev, x)."""
    z = affine(concat([h_prev, x], axis=-1), params[f"{prefix}.W"], params[f"{prefix}.b"])
    zi, zf, zo, zg = split_last(z, 4)
    i, f, o, g = sigmoid(zi), sigmoid(zf), sigmoid(zo), tanh(zg)
    c = f * c_prev + i * g
    h = o * tanh(c)
    return h, c


def _zero_state(batch_shape, d):
    return Tensor(np.zeros(tuple(batch_shape) + (d,))), Tensor(np.zeros(tuple(batch_shape) + (d,)))


def run_lstm(xs, params, prefix):
    """Hidden states h_1..h_T of one direction, from zero initial state."""
    if not xs:
        raise SequenceLengthError("recurrent stream needs at least one step")
    d = params[f"{prefix}.W"].shape[0] // 4
    h, c = _zero_state(as_tensor(xs[0]).shape[:-1], d)
    hs = []
    for x in xs:
        h, c = lstm_step(x, h, c, params, prefix)
        hs.append(h)
    return hs


def lookback_output(hidden_states, n):
    """Mean of the last ``min(n, T)`` hidden states."""
    if not hidden_states:
        raise SequenceLengthError("lookback needs at least one hidden state")
    if n < 1:
        raise ValueError("lookback n must be positive")
    return mean_of(hidden_states[-n:])


def run_recurrent(xs, params, prefix, bidirectional, lookback):
    """Lookback readout of a uni- or bidirectional LSTM over ``xs``.

    The backward direction reads the reversed sequence; the two readouts are
    concatenated (forward first).
    """
    out = lookback_output(run_lstm(xs, params, f"{prefix}.fwd"), lookback)
    if not bidirectional:
        return out
    back = lookback_output(run_lstm(list(reversed(xs)), params, f"{prefix}.bwd"), lookback)
    return concat([out, back], axis=-1)


def run_position_stream(L_seq, params, cfg, prefix="pose"):
    """Attention selection interleaved with the forward position LSTM.

    ``L_seq`` is (..., T, N, 5K). Returns (h_T^L, alpha (..., T, N), [l_t]).
    Selection is conditioned on the forward direction's previous hidden state;
    the backward direction (bidirectional mode) reuses the selected l_t.
    """
    L_seq = as_tensor(L_seq)
    T, N = L_seq.shape[-3], L_seq.shape[-2]
    if T < 1:
        raise SequenceLengthError("position stream needs T >= 1")
    batch = L_seq.shape[:-3]
    fwd = f"{prefix}.pos.fwd"
    d = params[f"{fwd}.W"].shape[0] // 4
    h, c = _zero_state(batch, d)
    projected = affine(L_seq, params[f"{prefix}.att.WL"]) if cfg.attention else None

    hs, ls, alphas = [], [], []
    for t in range(T):
        L_t = index(L_seq, (Ellipsis, t, slice(None), slice(None)))
        if cfg.attention:
            proj_t = index(projected, (Ellipsis, t, slice(None), slice(None)))
            alpha = softmax(attention_scores(proj_t, h, params, prefix), axis=-1)
            l_t = select_pose(L_t, alpha)
            alphas.append(alpha.values)
        else:
            l_t = reduce_mean(L_t, axis=-2)
            alphas.append(np.full(batch + (N,), 1.0 / N))
        h, c = lstm_step(l_t, h, c, params, fwd)
        hs.append(h)
        ls.append(l_t)

    h_pos = lookback_output(hs, cfg.lookback)
    if cfg.bidirectional:
        back = lookback_output(run_lstm(list(reversed(ls)), params, f"{prefix}.pos.bwd"), cfg.lookback)
        h_pos = concat([h_pos, back], axis=-1)
    return h_pos, np.stack(alphas, axis=-2), ls


def compute_velocities(selected):
    """V_t = l_{t+1} - l_t for t = 1..T-1."""
    if len(selected) < 2:
        raise SequenceLengthError(f"velocity needs T >= 2, got T = {len(selected)}")
    return [b - a for a, b in zip(selected[:-1], selected[1:])]


def run_velocity_stream(velocities, params, cfg, prefix="pose"):
    if len(velocities) < 1:
        raise SequenceLengthError("velocity stream needs T >= 2")
    return run_recurrent(list(velocities), params, f"{prefix}.vel", cfg.bidirectional, cfg.lookback)


def run_pose_stream(L_seq, params, cfg, prefix="pose"):
    h_pos, alpha, ls = run_position_stream(L_seq, params, cfg, prefix)
    h_vel = run_velocity_stream(compute_velocities(ls), params, cfg, prefix)
    return StreamOutputs(h_pos, h_vel, alpha, ls)
