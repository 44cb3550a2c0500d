"""Central finite-difference check of recorded gradients."""

import numpy as np

from .tensor import Tensor, backward


class DeterminismError(RuntimeError):
    """The loss closure returned different values for identical parameters."""


def _scalar(loss):
    return loss.item() if isinstance(loss, Tensor) else float(loss)


def grad_check_detail(closure, params, h=1e-5, max_coords=200, seed=0):
    """Per-tensor maximum relative error between analytic and numeric gradients.

    ``closure()`` must rebuild the loss from the current contents of
    ``params`` (a ParameterSet or a name -> Tensor mapping). Up to
    ``max_coords`` coordinates per tensor are perturbed.
    """
    tensors = {n: params[n] for n in params if params[n].requires_grad}
    for t in tensors.values():
        t.grad = np.zeros_like(t.values)

    loss = closure()
    base = _scalar(loss)
    if _scalar(closure()) != base:
        raise DeterminismError("closure is not deterministic: two evaluations at the same point differ")
    backward(loss)
    analytic = {n: t.grad.copy() for n, t in tensors.items()}

    rng = np.random.default_rng(seed)
    errors = {}
    for name, t in tensors.items():
        flat = t.values.reshape(-1)
        if flat.size <= max_coords:
            coords = np.arange(flat.size)
        else:
            coords = np.sort(rng.choice(flat.size, size=max_coords, replace=False))
        worst = 0.0
        for k in coords:
            old = flat[k]
            flat[k] = old + h
            f_plus = _scalar(closure())
            flat[k] = old - h
            f_minus = _scalar(closure())
            flat[k] = old
            numeric = (f_plus - f_minus) / (2.0 * h)
            a = analytic[name].reshape(-1)[k]
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, rel)
        errors[name] = worst
    for t in tensors.values():
        t.grad = np.zeros_like(t.values)
    return errors


def grad_check(closure, params, h=1e-5, max_coords=200, seed=0):
    """Maximum relative gradient error over all tensors in ``params``."""
    errors = grad_check_detail(closure, params, h=h, max_coords=max_coords, seed=seed)
    return max(errors.values(), default=0.0)
