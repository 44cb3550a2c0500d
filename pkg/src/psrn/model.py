"""PSRN assembly: pose stream + object stream + relation network + heads."""

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .numcore import ParameterSet, Tensor, affine, glorot_uniform
from .numcore.params import ConfigurationError
from .objectstream import ConvStubConfig, init_conv_stub, objects_from_grid, tiny_conv_forward
from .posedata.preprocess import partition_array
from .posedata.types import DEFAULT_PARTITION
from .posestream import encode_parts, init_pose_stream, run_pose_stream
from .relnet import init_relation, relation_forward

POSE_GROUP = "pose."
OBJECT_GROUP = "obj."
RELATION_GROUP = "rel."


@dataclass
class ModelConfig:
    num_classes: int = 15
    part_width: int = 100
    hidden: int = 512
    attention_width: int = 128
    lookback: int = 5
    bidirectional: bool = True
    attention: bool = True
    g_widths: tuple = (512, 512, 512, 512)
    f_widths: tuple = (512, 512)
    object_dim: int = 512
    object_source: str = "featmap"  # or "conv"
    conv: Optional[dict] = None
    part_dims: tuple = field(default=DEFAULT_PARTITION.dims)

    def __post_init__(self):
        self.g_widths = tuple(self.g_widths)
        self.f_widths = tuple(self.f_widths)
        self.part_dims = tuple(self.part_dims)
        if self.object_source not in ("featmap", "conv"):
            raise ConfigurationError(f"object_source must be 'featmap' or 'conv', got {self.object_source!r}")
        if self.part_dims != DEFAULT_PARTITION.dims:
            raise ConfigurationError(f"part dims must be {DEFAULT_PARTITION.dims}")
        if self.lookback < 1:
            raise ConfigurationError("lookback must be >= 1")

    @property
    def stream_dim(self):
        return self.hidden * (2 if self.bidirectional else 1)

    @property
    def conv_config(self):
        cfg = ConvStubConfig(**(self.conv or {}))
        if cfg.out_channels != self.object_dim:
            cfg = ConvStubConfig(**{**asdict(cfg), "out_channels": self.object_dim})
        return cfg

    def to_dict(self):
        return asdict(self)


@dataclass
class ForwardResult:
    logits_pos: Tensor
    logits_vel: Tensor
    logits_rel: Optional[Tensor]
    alpha: np.ndarray
    h_pos: Tensor
    h_vel: Tensor


class PSRN:
    """Parameters plus the forward pass of the two-stream relational network."""

    def __init__(self, cfg, seed=0):
        self.cfg = cfg
        self.params = ParameterSet()
        rng = np.random.default_rng(seed)
        init_pose_stream(self.params, cfg, rng)
        self.params.add("pose.cls_pos.W", glorot_uniform(rng, cfg.num_classes, cfg.stream_dim))
        self.params.add("pose.cls_pos.b", np.zeros(cfg.num_classes))
        self.params.add("pose.cls_vel.W", glorot_uniform(rng, cfg.num_classes, cfg.stream_dim))
        self.params.add("pose.cls_vel.b", np.zeros(cfg.num_classes))
        if cfg.object_source == "conv":
            init_conv_stub(self.params, cfg.conv_config, rng)
        init_relation(self.params, cfg, rng)

    def encode(self, poses):
        """Part-encode normalized poses (..., T, N, 14, 2) into (..., T, N, 5K)."""
        parts = partition_array(np.asarray(poses, dtype=np.float64))
        return encode_parts([Tensor(p) for p in parts], self.params, part_dims=self.cfg.part_dims)

    def objects(self, objects=None, rasters=None):
        if self.cfg.object_source == "conv":
            if rasters is None:
                raise ValueError("model uses the conv stub but no rasters were given")
            grid = tiny_conv_forward(Tensor(np.asarray(rasters, dtype=np.float64)), self.params, self.cfg.conv_config)
            return objects_from_grid(grid)
        if objects is None:
            raise ValueError("relation branch needs object vectors (feature maps)")
        objects = objects if isinstance(objects, Tensor) else Tensor(np.asarray(objects, dtype=np.float64))
        return objects

    def forward(self, poses, objects=None, rasters=None, relation=True):
        streams = run_pose_stream(self.encode(poses), self.params, self.cfg)
        p = self.params
        logits_pos = affine(streams.h_pos, p["pose.cls_pos.W"], p["pose.cls_pos.b"])
        logits_vel = affine(streams.h_vel, p["pose.cls_vel.W"], p["pose.cls_vel.b"])
        logits_rel = None
        if relation:
            objs = self.objects(objects, rasters)
            _, logits_rel = relation_forward(streams.h_pos, streams.h_vel, objs, p)
        return ForwardResult(logits_pos, logits_vel, logits_rel, streams.alpha, streams.h_pos, streams.h_vel)
