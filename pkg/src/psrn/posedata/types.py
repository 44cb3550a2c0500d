"""Keypoint, pose and sequence containers and the five-part body partition."""

from dataclasses import dataclass, field
from typing import Optional

KEYPOINT_NAMES = (
    "head_top", "neck",
    "r_shoulder", "r_elbow", "r_wrist",
    "l_shoulder", "l_elbow", "l_wrist",
    "r_hip", "r_knee", "r_ankle",
    "l_hip", "l_knee", "l_ankle",
)
NUM_KEYPOINTS = len(KEYPOINT_NAMES)
KP = {name: i for i, name in enumerate(KEYPOINT_NAMES)}


class PoseFormatError(ValueError):
    """Malformed pose data or file."""


@dataclass(frozen=True)
class Keypoint:
    x: float = 0.0
    y: float = 0.0
    present: bool = False

    def __post_init__(self):
        if not self.present and (self.x != 0.0 or self.y != 0.0):
            raise PoseFormatError(f"absent keypoint must sit at (0, 0), got ({self.x}, {self.y})")


MISSING = Keypoint()


@dataclass(frozen=True)
class Pose:
    keypoints: tuple

    def __post_init__(self):
        if len(self.keypoints) != NUM_KEYPOINTS:
            raise PoseFormatError(f"a pose has exactly {NUM_KEYPOINTS} keypoints, got {len(self.keypoints)}")

    @classmethod
    def virtual(cls):
        return cls((MISSING,) * NUM_KEYPOINTS)

    @classmethod
    def from_xy(cls, coords):
        """Build from 14 ``(x, y)`` pairs; ``None`` marks a missing keypoint."""
        return cls(tuple(MISSING if c is None else Keypoint(float(c[0]), float(c[1]), True) for c in coords))

    def is_virtual(self):
        return not any(k.present for k in self.keypoints)


@dataclass
class PoseSequence:
    video_id: str
    width: float
    height: float
    frames: list = field(default_factory=list)
    label: Optional[int] = None

    def __len__(self):
        return len(self.frames)


@dataclass(frozen=True)
class PartPartition:
    """Five keypoint groups; shoulders are shared by the head and the arms."""

    head: tuple = (KP["head_top"], KP["neck"], KP["r_shoulder"], KP["l_shoulder"])
    right_arm: tuple = (KP["r_shoulder"], KP["r_elbow"], KP["r_wrist"])
    left_arm: tuple = (KP["l_shoulder"], KP["l_elbow"], KP["l_wrist"])
    right_leg: tuple = (KP["r_hip"], KP["r_knee"], KP["r_ankle"])
    left_leg: tuple = (KP["l_hip"], KP["l_knee"], KP["l_ankle"])

    def __post_init__(self):
        if tuple(len(g) for g in self.groups) != (4, 3, 3, 3, 3):
            raise PoseFormatError("part groups must have sizes (4, 3, 3, 3, 3)")

    @property
    def groups(self):
        return (self.head, self.right_arm, self.left_arm, self.right_leg, self.left_leg)

    @property
    def dims(self):
        return tuple(2 * len(g) for g in self.groups)


DEFAULT_PARTITION = PartPartition()
PART_NAMES = ("head", "right_arm", "left_arm", "right_leg", "left_leg")
