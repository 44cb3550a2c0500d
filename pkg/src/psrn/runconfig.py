"""Serializable run configuration shared by the command line and the demos."""

import json
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

from .model import ModelConfig
from .posedata import SynthConfig
from .training import desk_plan, full_plan

# small widths so a full three-stage run takes a minute or two on one core
DESK_MODEL = dict(
    part_width=16, hidden=32, attention_width=16, lookback=5,
    g_widths=(32, 32, 32, 32), f_widths=(32, 32), object_dim=32,
)


@dataclass
class RunConfig:
    manifest: Optional[str] = None
    synth: dict = field(default_factory=dict)
    model: dict = field(default_factory=lambda: dict(DESK_MODEL))
    plan: str = "desk"  # "desk" or "full"
    iterations: tuple = (1200, 900, 900)
    rates: tuple = (3e-3, 3e-3, 1e-3)
    n_frames: int = 10
    batch_size: int = 16
    weight_decay: float = 4e-5
    trace_every: int = 1
    data_seed: int = 0
    init_seed: int = 0
    sampling_seed: int = 0
    eval_seed: int = 0
    ablation_seeds: tuple = (0, 1, 2)

    def __post_init__(self):
        self.iterations = tuple(self.iterations)
        self.rates = tuple(self.rates)
        self.ablation_seeds = tuple(self.ablation_seeds)
        if self.plan not in ("desk", "full"):
            raise ValueError(f"plan must be 'desk' or 'full', got {self.plan!r}")

    def synth_config(self):
        return SynthConfig(**{"seed": self.data_seed, **self.synth})

    def model_config(self, num_classes):
        return ModelConfig(**{"num_classes": num_classes, **self.model})

    def stage_plan(self):
        if self.plan == "full":
            return full_plan()
        return desk_plan(self.iterations, self.rates)

    def with_seed(self, seed):
        """Every named seed set to ``seed``."""
        return RunConfig(**{**asdict(self), "data_seed": seed, "init_seed": seed,
                            "sampling_seed": seed, "eval_seed": seed})

    def to_json(self):
        return json.dumps(asdict(self), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {unknown}")
        return cls(**data)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
