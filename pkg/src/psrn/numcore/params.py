"""Named parameter storage with freeze flags, plus initializers and the MLP helper."""

import numpy as np

from .ops import activation, affine
from .tensor import Tensor


class ConfigurationError(ValueError):
    """Layer widths, parameter shapes or names do not line up."""


class ParameterSet:
    """Ordered mapping of unique names to parameter tensors.

    Freezing a parameter turns off ``requires_grad``, so no gradient is ever
    recorded for it and the optimizer keeps no state for it.
    """

    def __init__(self):
        self._params = {}
        self._frozen = set()

    def add(self, name, values):
        if name in self._params:
            raise ConfigurationError(f"duplicate parameter name {name!r}")
        t = Tensor(np.array(values, dtype=np.float64, copy=True), requires_grad=True, name=name)
        self._params[name] = t
        return t

    def __getitem__(self, name):
        return self._params[name]

    def __contains__(self, name):
        return name in self._params

    def __iter__(self):
        return iter(self._params)

    def __len__(self):
        return len(self._params)

    def names(self, prefix=""):
        return [n for n in self._params if n.startswith(prefix)]

    def items(self):
        return self._params.items()

    def is_frozen(self, name):
        return name in self._frozen

    def trainable(self):
        return [n for n in self._params if n not in self._frozen]

    def freeze(self, prefixes):
        """Freeze every parameter whose name starts with one of ``prefixes``."""
        if isinstance(prefixes, str):
            prefixes = [prefixes]
        for name, t in self._params.items():
            if any(name.startswith(p) for p in prefixes):
                self._frozen.add(name)
                t.requires_grad = False
                t.grad = None

    def unfreeze_all(self):
        for name in self._frozen:
            t = self._params[name]
            t.requires_grad = True
            t.grad = np.zeros_like(t.values)
        self._frozen.clear()

    def zero_grad(self):
        for t in self._params.values():
            t.zero_grad()

    def state_dict(self):
        return {n: t.values.copy() for n, t in self._params.items()}

    def load_state_dict(self, state, strict=True):
        mismatched = []
        missing = [n for n in self._params if n not in state]
        unexpected = [n for n in state if n not in self._params]
        for n, t in self._params.items():
            if n in state and np.shape(state[n]) != t.shape:
                mismatched.append(f"{n}: expected {t.shape}, got {np.shape(state[n])}")
        if strict and (missing or unexpected or mismatched):
            raise ConfigurationError(
                "checkpoint does not match model: "
                + "; ".join(
                    [f"missing {missing}"] * bool(missing)
                    + [f"unexpected {unexpected}"] * bool(unexpected)
                    + mismatched
                )
            )
        for n, t in self._params.items():
            if n in state and np.shape(state[n]) == t.shape:
                t.values[...] = state[n]

    def num_values(self, prefix=""):
        return sum(self._params[n].size for n in self.names(prefix))


def glorot_uniform(rng, n_out, n_in):
    limit = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-limit, limit, size=(n_out, n_in))


def init_mlp(params, prefix, widths, rng):
    """Create weight/bias pairs ``{prefix}.{i}.W`` / ``{prefix}.{i}.b``.

    ``widths`` lists the input width followed by every layer's output width.
    """
    for i, (n_in, n_out) in enumerate(zip(widths[:-1], widths[1:])):
        params.add(f"{prefix}.{i}.W", glorot_uniform(rng, n_out, n_in))
        params.add(f"{prefix}.{i}.b", np.zeros(n_out))


def mlp_layers(params, prefix):
    layers = []
    i = 0
    while f"{prefix}.{i}.W" in params:
        if f"{prefix}.{i}.b" not in params:
            raise ConfigurationError(f"{prefix}.{i}.W has no matching bias")
        layers.append((params[f"{prefix}.{i}.W"], params[f"{prefix}.{i}.b"]))
        i += 1
    return layers


def mlp_forward(x, params, prefix, widths=None, kind="relu", final_activation=True):
    """Stack of affine layers, each followed by ``kind``.

    ``final_activation=False`` leaves the last layer linear, as used for
    classifier logits. If ``widths`` is given it is checked against the
    stored parameter shapes.
    """
    layers = mlp_layers(params, prefix)
    if not layers:
        raise ConfigurationError(f"no MLP parameters under prefix {prefix!r}")
    if widths is not None:
        expected = list(zip(widths[:-1], widths[1:]))
        got = [(W.shape[1], W.shape[0]) for W, _ in layers]
        if expected != got:
            raise ConfigurationError(f"MLP {prefix!r}: widths {widths} do not match parameters {got}")
    h = x
    for i, (W, b) in enumerate(layers):
        h = affine(h, W, b)
        if final_activation or i < len(layers) - 1:
            h = activation(h, kind)
    return h
