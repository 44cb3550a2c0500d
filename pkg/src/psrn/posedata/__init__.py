"""Multi-person 2D pose ingestion, preprocessing and synthetic data."""

from .io import parse_pose_record, pose_record, read_manifest, read_pose_file, write_manifest, write_pose_file
from .preprocess import (
    CapacityError,
    EmptyDatasetError,
    FrameSample,
    fill_poses,
    normalize_positions,
    partition_array,
    partition_parts,
    prepare_sequence,
    sample_frame_indices,
    sample_frames,
    scan_max_persons,
    sequence_to_array,
)
from .synth import SynthConfig, SynthDataset, class_family, class_pattern_bit, synth_generate, write_synth
from .types import (
    DEFAULT_PARTITION,
    KEYPOINT_NAMES,
    KP,
    MISSING,
    NUM_KEYPOINTS,
    PART_NAMES,
    Keypoint,
    PartPartition,
    Pose,
    PoseFormatError,
    PoseSequence,
)
