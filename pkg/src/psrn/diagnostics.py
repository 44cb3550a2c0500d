"""Finite-difference gradient checks for every differentiable module.

Each check builds a small deterministic instance and compares recorded
gradients with central differences (h = 1e-5). Internal modules are read out
through a fixed random linear functional so every coordinate carries a
gradient of ordinary size; the loss heads use cross-entropy on a 2-frame,
2-person input.

Biases start at a small positive value so ReLU units sit away from their
kink, where a central difference would straddle the non-differentiable
point. Coordinates whose true gradient is far below ``ulp(loss) / h`` cannot
be resolved by the oracle at all; the fixed instances below avoid them.
"""

import time
from dataclasses import dataclass

import numpy as np

from .model import PSRN, ModelConfig
from .numcore import (
    ParameterSet,
    cross_entropy,
    grad_check_detail,
    mul,
    reduce_sum,
)
from .objectstream import ConvStubConfig, init_conv_stub, tiny_conv_forward
from .posestream import (
    attention_weights,
    encode_parts,
    init_lstm,
    init_pose_stream,
    lookback_output,
    lstm_step,
)
from .relnet import init_relation, relation_forward

THRESHOLD = 1e-4
BIAS = 0.1

CHECK_CONFIG = ModelConfig(
    num_classes=3, part_width=2, hidden=2, attention_width=2, lookback=2,
    g_widths=(3, 3, 3, 3), f_widths=(3, 3), object_dim=3,
)


@dataclass
class CheckResult:
    module: str
    error: float
    per_tensor: dict
    seconds: float

    @property
    def passed(self):
        return self.error < THRESHOLD


def _positive_biases(params):
    for name, t in params.items():
        if name.endswith(".b"):
            t.values[:] = BIAS
    return params


def _readout(rng, shape):
    return rng.normal(size=shape)


def _linear(out, r):
    return reduce_sum(mul(out, r))


def _part_encoders(seed):
    rng = np.random.default_rng(seed)
    params = _positive_biases(_stream_params(seed))
    keep = ParameterSet()
    for n in params.names("pose.enc."):
        keep.add(n, params[n].values)
    parts = [rng.uniform(size=(2, d)) for d in CHECK_CONFIG.part_dims]
    r = _readout(rng, (2, 5 * CHECK_CONFIG.part_width))
    return (lambda: _linear(encode_parts(parts, keep), r)), keep


def _stream_params(seed):
    params = ParameterSet()
    init_pose_stream(params, CHECK_CONFIG, np.random.default_rng(seed))
    return params


def _attention(seed):
    rng = np.random.default_rng(seed)
    params = _positive_biases(_stream_params(seed))
    keep = ParameterSet()
    for n in params.names("pose.att."):
        keep.add(n, params[n].values)
    rep = 5 * CHECK_CONFIG.part_width
    keep.add("input.L", rng.uniform(size=(3, rep)))
    keep.add("input.h", rng.normal(size=CHECK_CONFIG.hidden))
    r = _readout(rng, 3)
    return (lambda: _linear(attention_weights(keep["input.L"], keep["input.h"], keep), r)), keep


def _lstm_cell(seed):
    rng = np.random.default_rng(seed)
    params = ParameterSet()
    init_lstm(params, "cell", 3, 4, rng)
    _positive_biases(params)
    params.add("input.x", rng.normal(size=3))
    params.add("input.h", rng.normal(size=4))
    params.add("input.c", rng.normal(size=4))
    r1, r2 = _readout(rng, 4), _readout(rng, 4)

    def closure():
        h, c = lstm_step(params["input.x"], params["input.h"], params["input.c"], params, "cell")
        return _linear(h, r1) + _linear(c, r2)

    return closure, params


def _lookback(seed):
    rng = np.random.default_rng(seed)
    params = ParameterSet()
    for t in range(6):
        params.add(f"h.{t}", rng.normal(size=4))
    r = _readout(rng, 4)
    return (lambda: _linear(lookback_output([params[f"h.{t}"] for t in range(6)], 3), r)), params


def _conv_stub(seed):
    rng = np.random.default_rng(seed)
    cfg = ConvStubConfig(hidden_channels=3, out_channels=2)
    params = ParameterSet()
    init_conv_stub(params, cfg, rng)
    _positive_biases(params)
    params.add("input.raster", rng.normal(size=(1, 4, 4, 3)))
    r = _readout(rng, (1, 1, 1, 2))
    return (lambda: _linear(tiny_conv_forward(params["input.raster"], params, cfg), r)), params


def _relation(seed):
    rng = np.random.default_rng(seed)
    params = ParameterSet()
    init_relation(params, CHECK_CONFIG, rng)
    _positive_biases(params)
    P = CHECK_CONFIG.stream_dim
    params.add("input.h_pos", rng.normal(size=P))
    params.add("input.h_vel", rng.normal(size=P))
    params.add("input.objects", rng.normal(size=(3, CHECK_CONFIG.object_dim)))
    r = _readout(rng, CHECK_CONFIG.f_widths[-1])

    def closure():
        R, _ = relation_forward(params["input.h_pos"], params["input.h_vel"], params["input.objects"], params)
        return _linear(R, r)

    return closure, params


def _network(seed, heads, object_source="featmap"):
    rng = np.random.default_rng(seed)
    cfg = CHECK_CONFIG
    if object_source == "conv":
        cfg = ModelConfig(**{**cfg.to_dict(), "object_source": "conv",
                             "conv": {"hidden_channels": 2, "out_channels": cfg.object_dim}})
    model = PSRN(cfg, seed=seed)
    _positive_biases(model.params)
    # one video: 2 frames, 2 persons
    poses = rng.uniform(size=(1, 2, 2, 14, 2))
    objects = rng.normal(size=(1, 4, cfg.object_dim))
    rasters = rng.normal(size=(1, 8, 8, 3)) if object_source == "conv" else None
    labels = {"pos": [1], "vel": [2], "rel": [0]}

    def closure():
        out = model.forward(poses, objects if rasters is None else None, rasters,
                            relation="rel" in heads)
        logits = {"pos": out.logits_pos, "vel": out.logits_vel, "rel": out.logits_rel}
        total = None
        for k in heads:
            term = cross_entropy(logits[k], labels[k])
            total = term if total is None else total + term
        return total

    return closure, model.params


# (module name, builder, seed); seeds are part of the fixed instance definition
CHECKS = (
    ("part_encoders", _part_encoders, 0),
    ("attention", _attention, 0),
    ("lstm_cell", _lstm_cell, 0),
    ("lookback", _lookback, 0),
    ("conv_stub", _conv_stub, 0),
    ("relation_g_f", _relation, 0),
    ("loss_pos", lambda s: _network(s, ("pos",)), 0),
    ("loss_vel", lambda s: _network(s, ("vel",)), 0),
    ("loss_rel", lambda s: _network(s, ("rel",)), 0),
    ("end_to_end", lambda s: _network(s, ("pos", "vel", "rel")), 0),
    ("end_to_end_conv", lambda s: _network(s, ("pos", "vel", "rel"), "conv"), 0),
)


def run_checks(names=None, h=1e-5, max_coords=200):
    """Run the module checks; returns a list of :class:`CheckResult`."""
    results = []
    for name, build, seed in CHECKS:
        if names is not None and name not in names:
            continue
        start = time.perf_counter()
        closure, params = build(seed)
        per = grad_check_detail(closure, params, h=h, max_coords=max_coords)
        results.append(CheckResult(name, max(per.values()), per, time.perf_counter() - start))
    return results
