"""Adam with bias correction and an L2 penalty folded into the gradient."""

from dataclasses import dataclass, field

import numpy as np


class ConsistencyError(RuntimeError):
    """Optimizer state disagrees with the parameter set's freeze flags."""


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def for_params(cls, params, **kwargs):
        """Fresh state holding moments for exactly the non-frozen parameters."""
        state = cls(**kwargs)
        for name in params.trainable():
            state.m[name] = np.zeros_like(params[name].values)
            state.v[name] = np.zeros_like(params[name].values)
        return state


def adam_step(params, state, lr, weight_decay=0.0):
    """Apply one Adam update in place and zero all gradients.

    The penalty ``weight_decay * ||p||^2`` contributes ``2 * weight_decay * p``
    to each gradient before the moment update.
    """
    trainable = set(params.trainable())
    stray = [n for n in state.m if n not in trainable]
    if stray:
        raise ConsistencyError(f"optimizer holds moments for frozen or unknown parameters: {stray}")
    missing = [n for n in trainable if n not in state.m]
    if missing:
        raise ConsistencyError(f"optimizer has no moments for trainable parameters: {missing}")

    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for name in state.m:
        p = params[name]
        g = p.grad
        if weight_decay:
            g = g + 2.0 * weight_decay * p.values
        m, v = state.m[name], state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        if lr:
            p.values -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    params.zero_grad()
    return state
