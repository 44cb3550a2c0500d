"""Pose-based two-stream relational network for action recognition, in numpy."""

from .model import PSRN, ModelConfig

__version__ = "0.1.0"
