"""Learning-rate schedules."""

from dataclasses import dataclass

CONSTANT = "constant-with-halving"
WARMUP = "exponential-warmup-then-halving"


@dataclass(frozen=True)
class LrSchedule:
    """``floor`` is the warmup starting rate and a lower bound for every step."""

    kind: str = CONSTANT
    initial: float = 1e-4
    warmup_steps: int = 0
    halving_step: int = 78_000
    floor: float = 0.0

    def __post_init__(self):
        if self.kind not in (CONSTANT, WARMUP):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind == WARMUP and not (0 < self.floor <= self.initial and self.warmup_steps > 0):
            raise ValueError("warmup needs 0 < floor <= initial and warmup_steps > 0")

    def scaled(self, factor):
        """Same shape with step constants multiplied by ``factor``."""
        return LrSchedule(
            self.kind,
            self.initial,
            max(1, round(self.warmup_steps * factor)) if self.warmup_steps else 0,
            max(1, round(self.halving_step * factor)),
            self.floor,
        )


def lr_at_step(schedule, step):
    if step < 0:
        raise ValueError("step must be non-negative")
    if schedule.kind == WARMUP and step < schedule.warmup_steps:
        ratio = schedule.initial / schedule.floor
        rate = schedule.floor * ratio ** (step / schedule.warmup_steps)
    else:
        rate = schedule.initial
        if step > schedule.halving_step:
            rate *= 0.5
    return max(rate, schedule.floor)


STAGE1_SCHEDULE = LrSchedule(CONSTANT, 1e-4, 0, 78_000)
STAGE2_SCHEDULE = LrSchedule(WARMUP, 1e-4, 2_000, 28_000, 1e-6)
STAGE3_SCHEDULE = LrSchedule(CONSTANT, 5e-5, 0, 20_000)
