"""Spatial object stream: feature-map files, object extraction, and a tiny conv front end.

Feature-map file layout: ``b"PSRNFMAP"``, u32 version, u32 H, u32 W, u32 D,
then H*W*D little-endian float32 values ordered h, then w, then channel.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .numcore import avg_pool2d, conv2d, relu, reshape
from .numcore.params import ConfigurationError
from .numcore.tensor import Tensor, as_tensor

MAGIC = b"PSRNFMAP"
VERSION = 1
_HEADER = struct.Struct("<8sIIII")


class FeatureMapFormatError(ValueError):
    pass


@dataclass
class FeatureMap:
    values: np.ndarray  # (H, W, D)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3 or 0 in self.values.shape:
            raise FeatureMapFormatError(f"feature map must be a non-empty H x W x D grid, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise FeatureMapFormatError("feature map holds non-finite values")

    @property
    def shape(self):
        return self.values.shape


def encode_feature_map(fmap):
    H, W, D = fmap.shape
    return _HEADER.pack(MAGIC, VERSION, H, W, D) + np.ascontiguousarray(fmap.values, dtype="<f4").tobytes()


def decode_feature_map(data):
    if len(data) < 8 or data[:8] != MAGIC:
        raise FeatureMapFormatError("bad magic at byte 0: not a PSRN feature map")
    if len(data) < _HEADER.size:
        raise FeatureMapFormatError(f"truncated header at byte {len(data)}")
    _, version, H, W, D = _HEADER.unpack_from(data)
    if version != VERSION:
        raise FeatureMapFormatError(f"unsupported feature-map version {version} at byte 8")
    need = 4 * H * W * D
    payload = len(data) - _HEADER.size
    if payload < need:
        raise FeatureMapFormatError(
            f"truncated payload at byte {len(data)}: header declares {H}x{W}x{D} ({need} bytes), found {payload}"
        )
    if payload > need:
        raise FeatureMapFormatError(f"trailing bytes after payload at byte {_HEADER.size + need}")
    vals = np.frombuffer(data, dtype="<f4", count=H * W * D, offset=_HEADER.size)
    return FeatureMap(vals.reshape(H, W, D).astype(np.float64))


def save_feature_map(path, fmap):
    with open(path, "wb") as fh:
        fh.write(encode_feature_map(fmap))


def load_feature_map(path):
    with open(path, "rb") as fh:
        return decode_feature_map(fh.read())


def extract_objects(fmap):
    """Row-major list of the H*W channel fibers, as an (H*W, D) array."""
    values = fmap.values if isinstance(fmap, FeatureMap) else np.asarray(fmap)
    H, W, D = values.shape
    return values.reshape(H * W, D).copy()


def objects_from_grid(grid):
    """Differentiable counterpart of :func:`extract_objects` for (B, H, W, D) tensors."""
    grid = as_tensor(grid)
    B, H, W, D = grid.shape
    return reshape(grid, (B, H * W, D))


# -- convolution stub ------------------------------------------------------


@dataclass(frozen=True)
class ConvStubConfig:
    in_channels: int = 3
    hidden_channels: int = 8
    out_channels: int = 32
    pools: tuple = (2, 2)
    kernel: int = 3

    @property
    def stride(self):
        return self.pools[0] * self.pools[1]


def init_conv_stub(params, cfg, rng, prefix="obj"):
    def kernel(c_out, c_in):
        fan_in = c_in * cfg.kernel * cfg.kernel
        limit = np.sqrt(6.0 / (fan_in + c_out * cfg.kernel * cfg.kernel))
        return rng.uniform(-limit, limit, size=(c_out, cfg.kernel, cfg.kernel, c_in))

    params.add(f"{prefix}.conv0.W", kernel(cfg.hidden_channels, cfg.in_channels))
    params.add(f"{prefix}.conv0.b", np.zeros(cfg.hidden_channels))
    params.add(f"{prefix}.conv1.W", kernel(cfg.out_channels, cfg.hidden_channels))
    params.add(f"{prefix}.conv1.b", np.zeros(cfg.out_channels))


def tiny_conv_forward(raster, params, cfg, prefix="obj"):
    """Two conv -> ReLU -> average-pool blocks; (B, H, W, C) -> (B, H/s, W/s, D)."""
    x = as_tensor(raster)
    single = x.values.ndim == 3
    if single:
        x = Tensor(x.values[None]) if not x.requires_grad else reshape(x, (1,) + x.shape)
    H, W = x.shape[1:3]
    if H % cfg.stride or W % cfg.stride:
        raise ConfigurationError(f"raster {H}x{W} is not divisible by the stub stride {cfg.stride}")
    for i, pool in enumerate(cfg.pools):
        x = conv2d(x, params[f"{prefix}.conv{i}.W"], params[f"{prefix}.conv{i}.b"])
        x = avg_pool2d(relu(x), pool)
    if single:
        x = reshape(x, x.shape[1:])
    return x
