"""Pose-object relational network.

Every object vector is composed with both pose representations by a shared
perceptron g, the results are summed over objects, and a second perceptron f
maps the sum to the relation feature R; a final affine layer gives logits.
"""

import numpy as np

from .numcore import (
    affine,
    backward,
    broadcast_to,
    concat,
    cross_entropy,
    expand_dims,
    init_mlp,
    mlp_forward,
    reduce_sum,
)
from .numcore.params import ConfigurationError, glorot_uniform
from .numcore.tensor import Tensor, as_tensor


class EmptyObjectSetError(ValueError):
    pass


def init_relation(params, cfg, rng, prefix="rel"):
    """g: 4 ReLU layers, f: 2 ReLU layers, then an affine classifier."""
    pose_dim = cfg.stream_dim
    g_in = 2 * pose_dim + cfg.object_dim
    init_mlp(params, f"{prefix}.g", [g_in] + list(cfg.g_widths), rng)
    init_mlp(params, f"{prefix}.f", [cfg.g_widths[-1]] + list(cfg.f_widths), rng)
    params.add(f"{prefix}.out.W", glorot_uniform(rng, cfg.num_classes, cfg.f_widths[-1]))
    params.add(f"{prefix}.out.b", np.zeros(cfg.num_classes))


def relation_pairs(h_pos, h_vel, objects):
    """Concatenate (h_pos, h_vel, x_i) for every object: (..., O, 2P + D)."""
    h_pos, h_vel, objects = as_tensor(h_pos), as_tensor(h_vel), as_tensor(objects)
    if objects.shape[-2] == 0:
        raise EmptyObjectSetError("relation network needs at least one object")
    if h_pos.shape[:-1] != objects.shape[:-2] or h_vel.shape[:-1] != objects.shape[:-2]:
        raise ConfigurationError(
            f"batch shapes differ: h_pos {h_pos.shape}, h_vel {h_vel.shape}, objects {objects.shape}"
        )
    n_obj = objects.shape[-2]
    pose = concat([h_pos, h_vel], axis=-1)
    pose = broadcast_to(expand_dims(pose, -2), pose.shape[:-1] + (n_obj, pose.shape[-1]))
    return concat([pose, objects], axis=-1)


def relation_forward(h_pos, h_vel, objects, params, prefix="rel"):
    """Return (R, logits) for pose representations and an (..., O, D) object set."""
    pairs = relation_pairs(h_pos, h_vel, objects)
    W0 = params[f"{prefix}.g.0.W"]
    if pairs.shape[-1] != W0.shape[1]:
        raise ConfigurationError(
            f"g expects input dim {W0.shape[1]}, got {pairs.shape[-1]} (pose {as_tensor(h_pos).shape[-1]}"
            f" + {as_tensor(h_vel).shape[-1]}, object {as_tensor(objects).shape[-1]})"
        )
    g = mlp_forward(pairs, params, f"{prefix}.g", kind="relu", final_activation=True)
    pooled = reduce_sum(g, axis=-2)
    R = mlp_forward(pooled, params, f"{prefix}.f", kind="relu", final_activation=True)
    logits = affine(R, params[f"{prefix}.out.W"], params[f"{prefix}.out.b"])
    return R, logits


def relation_grad(h_pos, h_vel, objects, params, label, prefix="rel"):
    """Gradients of the relation cross-entropy w.r.t. parameters and inputs.

    Returns ``(loss, grads)`` where ``grads`` maps parameter names plus
    ``"h_pos"``, ``"h_vel"`` and ``"objects"`` to arrays.
    """
    inputs = {
        "h_pos": Tensor(np.asarray(h_pos, dtype=np.float64), requires_grad=True),
        "h_vel": Tensor(np.asarray(h_vel, dtype=np.float64), requires_grad=True),
        "objects": Tensor(np.asarray(objects, dtype=np.float64), requires_grad=True),
    }
    names = params.names(prefix + ".")
    for n in names:
        params[n].zero_grad()
    _, logits = relation_forward(inputs["h_pos"], inputs["h_vel"], inputs["objects"], params, prefix)
    loss = cross_entropy(logits, label)
    backward(loss)
    grads = {n: params[n].grad.copy() for n in names if params[n].grad is not None}
    grads.update({k: t.grad.copy() for k, t in inputs.items()})
    for n in names:
        params[n].zero_grad()
    return loss.item(), grads
