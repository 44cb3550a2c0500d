"""The three cross-entropy heads and the L2 penalty."""

from dataclasses import dataclass

from ..numcore import backward, cross_entropy, sum_squares
from .data import DataError

LOSS_NAMES = ("pos", "vel", "rel")
DEFAULT_WEIGHT_DECAY = 4e-5


@dataclass
class LossBreakdown:
    pos: float = 0.0
    vel: float = 0.0
    rel: float = 0.0
    reg: float = 0.0

    @property
    def total(self):
        return self.pos + self.vel + self.rel + self.reg

    def as_row(self):
        return {"L_pos": self.pos, "L_vel": self.vel, "L_rel": self.rel, "reg": self.reg, "total": self.total}


def regularization(params, weight_decay):
    """``weight_decay * sum ||p||^2`` over the trainable parameters."""
    if not weight_decay:
        return 0.0
    return weight_decay * sum_squares(params[n] for n in params.trainable())


def loss_graph(model, batch, active=LOSS_NAMES):
    """Forward pass and the per-head loss tensors (batch-mean cross-entropy)."""
    active = tuple(active)
    unknown = set(active) - set(LOSS_NAMES)
    if unknown:
        raise ValueError(f"unknown losses {sorted(unknown)}")
    if len(batch.labels) == 0:
        raise DataError("empty batch")
    use_rel = "rel" in active
    if use_rel:
        if model.cfg.object_source == "conv" and batch.rasters is None:
            raise DataError("relation loss is active but the batch has no rasters")
        if model.cfg.object_source == "featmap" and batch.objects is None:
            raise DataError("relation loss is active but the batch has no feature maps")
    out = model.forward(batch.poses, batch.objects, batch.rasters, relation=use_rel)
    heads = {"pos": out.logits_pos, "vel": out.logits_vel, "rel": out.logits_rel}
    return out, {k: cross_entropy(heads[k], batch.labels) for k in active}


def total_loss(model, batch, active=LOSS_NAMES, weight_decay=DEFAULT_WEIGHT_DECAY):
    """Evaluate the active heads, backpropagate their sum, return the breakdown.

    The penalty's gradient is not recorded here; :func:`adam_step` adds it.
    """
    _, losses = loss_graph(model, batch, active)
    total = None
    for t in losses.values():
        total = t if total is None else total + t
    backward(total)
    parts = {k: t.item() for k, t in losses.items()}
    return LossBreakdown(reg=regularization(model.params, weight_decay), **parts)
