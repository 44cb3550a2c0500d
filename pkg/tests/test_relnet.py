import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psrn import ModelConfig
from psrn.numcore import ConfigurationError, ParameterSet, cross_entropy, mlp_forward
from psrn.relnet import EmptyObjectSetError, init_relation, relation_forward, relation_grad


def rel_setup(seed=0, P=3, D=4, C=5, width=6):
    cfg = ModelConfig(num_classes=C, hidden=P, bidirectional=False, g_widths=(width,) * 4,
                      f_widths=(width, width), object_dim=D)
    params = ParameterSet()
    init_relation(params, cfg, np.random.default_rng(seed))
    for name in params.names():
        if name.endswith(".b"):
            params[name].values[:] = 0.05
    return cfg, params


def inputs(seed, P=3, D=4, O=5):
    rng = np.random.default_rng(seed)
    return rng.normal(size=P), rng.normal(size=P), rng.normal(size=(O, D))


def g_sum_oracle(params, hp, hv, objs):
    total = 0.0
    for x in objs:
        total = total + mlp_forward(np.concatenate([hp, hv, x]), params, "rel.g").values
    return total


def test_single_object():
    _, params = rel_setup()
    hp, hv, objs = inputs(1, O=1)
    R, _ = relation_forward(hp, hv, objs, params)
    g = mlp_forward(np.concatenate([hp, hv, objs[0]]), params, "rel.g")
    np.testing.assert_allclose(R.values, mlp_forward(g, params, "rel.f").values, rtol=1e-14)


def test_zero_params_give_log_c():
    _, params = rel_setup(C=7)
    for _, t in params.items():
        t.values[:] = 0.0
    hp, hv, objs = inputs(2)
    _, logits = relation_forward(hp, hv, objs, params)
    assert np.array_equal(logits.values, np.zeros(7))
    assert abs(cross_entropy(logits, 3).item() - math.log(7)) < 1e-12


def test_duplicated_objects_double_the_sum():
    _, params = rel_setup()
    hp, hv, objs = inputs(3)
    once = g_sum_oracle(params, hp, hv, objs)
    twice = g_sum_oracle(params, hp, hv, np.concatenate([objs, objs]))
    np.testing.assert_allclose(twice, 2 * once, rtol=1e-13)
    R, _ = relation_forward(hp, hv, np.concatenate([objs, objs]), params)
    np.testing.assert_allclose(R.values, mlp_forward(twice, params, "rel.f").values, rtol=1e-12)


def test_empty_and_mismatched_inputs():
    _, params = rel_setup()
    hp, hv, _ = inputs(4)
    with pytest.raises(EmptyObjectSetError):
        relation_forward(hp, hv, np.zeros((0, 4)), params)
    with pytest.raises(ConfigurationError):
        relation_forward(hp, hv, np.zeros((2, 9)), params)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_object_permutation_invariance(seed):
    _, params = rel_setup(seed % 7)
    hp, hv, objs = inputs(seed, O=9)
    perm = np.random.default_rng(seed).permutation(9)
    _, a = relation_forward(hp, hv, objs, params)
    _, b = relation_forward(hp, hv, objs[perm], params)
    assert np.max(np.abs(a.values - b.values)) < 1e-9
    assert np.argmax(a.values) == np.argmax(b.values)


def test_batched_matches_single():
    _, params = rel_setup()
    rng = np.random.default_rng(5)
    hp, hv, objs = rng.normal(size=(2, 3)), rng.normal(size=(2, 3)), rng.normal(size=(2, 4, 4))
    _, batched = relation_forward(hp, hv, objs, params)
    for i in range(2):
        _, single = relation_forward(hp[i], hv[i], objs[i], params)
        np.testing.assert_allclose(batched.values[i], single.values, rtol=1e-13)


def test_parameter_count_independent_of_grid():
    _, params = rel_setup()
    n = params.num_values()
    hp, hv, _ = inputs(6)
    for O in (1, 16, 49):
        relation_forward(hp, hv, np.zeros((O, 4)), params)
    assert params.num_values() == n


def _fd(fun, x, h=1e-5):
    out = np.zeros_like(x)
    flat, g = x.reshape(-1), out.reshape(-1)
    for k in range(flat.size):
        old = flat[k]
        flat[k] = old + h
        fp = fun()
        flat[k] = old - h
        fm = fun()
        flat[k] = old
        g[k] = (fp - fm) / (2 * h)
    return out


def _rel_err(a, n):
    return np.max(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-8))


def test_relation_grad_finite_differences():
    _, params = rel_setup(seed=7)
    hp, hv, objs = inputs(8, O=3)
    loss, grads = relation_grad(hp, hv, objs, params, label=2)

    def fun():
        _, logits = relation_forward(hp, hv, objs, params)
        return cross_entropy(logits, 2).item()

    assert abs(fun() - loss) < 1e-15
    for key, arr in (("h_pos", hp), ("h_vel", hv), ("objects", objs)):
        assert _rel_err(grads[key], _fd(fun, arr)) < 1e-4, key
    for name in params.names():
        assert _rel_err(grads[name], _fd(fun, params[name].values)) < 1e-4, name


def test_zero_upstream_gives_zero_grads():
    from psrn.numcore import backward

    _, params = rel_setup(seed=9)
    hp, hv, objs = inputs(9)
    _, logits = relation_forward(hp, hv, objs, params)
    backward(logits, np.zeros(5))
    for _, t in params.items():
        assert t.grad is None or not np.any(t.grad)


def test_object_gradient_depends_only_on_its_own_value():
    # with the pre-f gradient held fixed, d loss / d x_i is a function of x_i alone
    from psrn.numcore import Tensor, backward, mul, reduce_sum
    from psrn.relnet import relation_pairs

    _, params = rel_setup(seed=10)
    hp, hv, objs = inputs(10, O=4)
    upstream = np.random.default_rng(11).normal(size=6)

    def obj_grad(o):
        x = Tensor(o.copy(), requires_grad=True)
        g = mlp_forward(relation_pairs(hp, hv, x), params, "rel.g")
        backward(reduce_sum(mul(g, upstream)))
        return x.grad[0]

    base = obj_grad(objs)
    other = objs.copy()
    other[1:] += np.random.default_rng(12).normal(size=(3, 4))
    np.testing.assert_allclose(obj_grad(other), base, rtol=1e-13)
