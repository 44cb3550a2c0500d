"""Stage plans and the optimizer loop."""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..model import OBJECT_GROUP, POSE_GROUP, RELATION_GROUP
from ..numcore import AdamState, adam_step
from .data import make_batch
from .losses import DEFAULT_WEIGHT_DECAY, total_loss
from .schedule import STAGE1_SCHEDULE, STAGE2_SCHEDULE, STAGE3_SCHEDULE, LrSchedule, lr_at_step


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class Stage:
    name: str
    losses: tuple
    frozen: tuple
    schedule: LrSchedule
    iterations: int


@dataclass(frozen=True)
class StagePlan:
    stages: tuple

    def __getitem__(self, i):
        return self.stages[i]

    def __len__(self):
        return len(self.stages)

    def scaled(self, factor, iterations=None):
        """Shrink step constants by ``factor``; optionally override budgets."""
        stages = []
        for i, s in enumerate(self.stages):
            its = iterations[i] if iterations is not None else max(1, round(s.iterations * factor))
            stages.append(replace(s, schedule=s.schedule.scaled(factor), iterations=its))
        return StagePlan(tuple(stages))


def full_plan():
    """Three stages with the published schedules; budgets are defaults (2x the halving point)."""
    return StagePlan((
        Stage("1", ("pos", "vel"), (OBJECT_GROUP, RELATION_GROUP), STAGE1_SCHEDULE, 156_000),
        Stage("2", ("rel",), (POSE_GROUP,), STAGE2_SCHEDULE, 56_000),
        Stage("3", ("pos", "vel", "rel"), (), STAGE3_SCHEDULE, 40_000),
    ))


def desk_plan(iterations=(1200, 900, 900), rates=(3e-3, 3e-3, 1e-3)):
    """Desk-scale plan: same three stages, schedule shapes kept, rates raised."""
    s1, s2, s3 = iterations
    r1, r2, r3 = rates
    return StagePlan((
        Stage("1", ("pos", "vel"), (OBJECT_GROUP, RELATION_GROUP),
              LrSchedule("constant-with-halving", r1, 0, s1 // 2), s1),
        Stage("2", ("rel",), (POSE_GROUP,),
              LrSchedule("exponential-warmup-then-halving", r2, max(1, s2 // 10), s2 // 2, r2 / 100), s2),
        Stage("3", ("pos", "vel", "rel"), (),
              LrSchedule("constant-with-halving", r3, 0, s3 // 2), s3),
    ))


@dataclass
class StageResult:
    stage: str
    trace: list = field(default_factory=list)


def _nonfinite_report(params):
    bad = [n for n, t in params.items() if not np.all(np.isfinite(t.values))]
    bad += [n for n, t in params.items() if t.grad is not None and not np.all(np.isfinite(t.grad))]
    return sorted(set(bad))


def run_stage(model, stage, videos, seed, batch_size=1, n_frames=10,
              weight_decay=DEFAULT_WEIGHT_DECAY, trace_every=1):
    """Train ``model`` in place for one stage; frozen groups are never touched."""
    params = model.params
    params.unfreeze_all()
    params.freeze(stage.frozen)
    state = AdamState.for_params(params)
    rng = np.random.default_rng([seed, sum(map(ord, stage.name))])
    n = len(videos.videos)
    if n == 0:
        raise TrainingError("training split is empty")
    need_obj = "rel" in stage.losses and model.cfg.object_source == "featmap"
    need_ras = "rel" in stage.losses and model.cfg.object_source == "conv"
    result = StageResult(stage.name)

    try:
        for step in range(stage.iterations):
            pick = rng.choice(n, size=min(batch_size, n), replace=False)
            chosen = [videos.videos[i] for i in pick]
            frame_rngs = [np.random.default_rng(s) for s in rng.integers(0, 2**63 - 1, size=len(chosen))]
            batch = make_batch(chosen, n_frames, frame_rngs, need_obj, need_ras)
            lr = lr_at_step(stage.schedule, step)
            parts = total_loss(model, batch, stage.losses, weight_decay)
            if not math.isfinite(parts.total):
                raise TrainingError(
                    f"stage {stage.name} step {step}: non-finite loss {parts.as_row()}; "
                    f"offending tensors: {_nonfinite_report(params) or 'none (overflow in loss)'}"
                )
            bad = _nonfinite_report(params)
            if bad:
                raise TrainingError(f"stage {stage.name} step {step}: non-finite gradients in {bad}")
            adam_step(params, state, lr, weight_decay)
            if step % trace_every == 0:
                result.trace.append({"step": step, "stage": stage.name, "lr": lr, **parts.as_row()})
    finally:
        params.unfreeze_all()
    return result


def run_plan(model, plan, videos, seed, **kwargs):
    return [run_stage(model, stage, videos, seed, **kwargs) for stage in plan.stages]
