"""Pose filling, normalization, part partition and frame sampling."""

from typing import NamedTuple

import numpy as np

from .types import (
    DEFAULT_PARTITION,
    MISSING,
    NUM_KEYPOINTS,
    Keypoint,
    Pose,
    PoseFormatError,
    PoseSequence,
)


class EmptyDatasetError(ValueError):
    pass


class CapacityError(ValueError):
    pass


def scan_max_persons(sequences):
    """Largest per-frame detection count over every frame of every video."""
    n = 0
    for seq in sequences:
        for frame in seq.frames:
            n = max(n, len(frame))
    if n == 0:
        raise EmptyDatasetError("no frame in the dataset holds a detection")
    return n


def fill_poses(sequence, n_persons):
    """Pad every frame to ``n_persons`` poses with all-(0, 0) virtual poses.

    Real detections keep their order; virtual poses go at the end. Missing
    keypoints inside real detections are already (0, 0) by construction.
    """
    frames = []
    for t, frame in enumerate(sequence.frames):
        if len(frame) > n_persons:
            raise CapacityError(
                f"video {sequence.video_id!r} frame {t} has {len(frame)} detections, capacity is {n_persons}"
            )
        filled = [Pose(tuple(k if k.present else MISSING for k in p.keypoints)) for p in frame]
        filled.extend(Pose.virtual() for _ in range(n_persons - len(frame)))
        frames.append(filled)
    return PoseSequence(sequence.video_id, sequence.width, sequence.height, frames, sequence.label)


def normalize_positions(sequence):
    """Rescale pixel positions to [0, 1] by image width/height (clamped).

    The image size is carried over unchanged, so apply this once.
    """
    w, h = sequence.width, sequence.height
    if not (w > 0 and h > 0):
        raise PoseFormatError(f"video {sequence.video_id!r}: image size must be positive, got {w}x{h}")

    def norm(k):
        if not k.present:
            return k
        return Keypoint(min(max(k.x / w, 0.0), 1.0), min(max(k.y / h, 0.0), 1.0), True)

    frames = [[Pose(tuple(norm(k) for k in p.keypoints)) for p in frame] for frame in sequence.frames]
    return PoseSequence(sequence.video_id, w, h, frames, sequence.label)


def partition_parts(pose, partition=DEFAULT_PARTITION):
    """Five part vectors of concatenated (x, y) pairs, dims (8, 6, 6, 6, 6)."""
    return [
        np.array([c for i in group for c in (pose.keypoints[i].x, pose.keypoints[i].y)], dtype=np.float64)
        for group in partition.groups
    ]


def partition_array(coords, partition=DEFAULT_PARTITION):
    """Array form of :func:`partition_parts` over (..., 14, 2) coordinates."""
    return [coords[..., list(group), :].reshape(coords.shape[:-2] + (2 * len(group),)) for group in partition.groups]


def sequence_to_array(sequence):
    """(frames, persons, 14, 2) array of a filled sequence."""
    counts = {len(f) for f in sequence.frames}
    if len(counts) > 1:
        raise CapacityError(f"video {sequence.video_id!r} is not filled: per-frame counts {sorted(counts)}")
    out = np.array(
        [[[(k.x, k.y) for k in p.keypoints] for p in frame] for frame in sequence.frames],
        dtype=np.float64,
    )
    if out.size == 0:
        return out.reshape(len(sequence.frames), 0, NUM_KEYPOINTS, 2)
    return out


class FrameSample(NamedTuple):
    sequence: PoseSequence
    indices: np.ndarray
    object_frame: int


def sample_frame_indices(n_frames, n_samples, rng):
    """Sorted frame indices plus one of them resampled for the object stream."""
    if n_frames <= 0:
        raise ValueError("cannot sample frames from an empty video")
    replace = n_frames < n_samples
    idx = np.sort(rng.choice(n_frames, size=n_samples, replace=replace))
    return idx, int(idx[rng.integers(n_samples)])


def sample_frames(sequence, n_samples, seed):
    """Draw ``n_samples`` frames in temporal order, deterministically per seed.

    Without replacement when the video is long enough; otherwise with
    replacement, still sorted.
    """
    rng = np.random.default_rng(seed)
    idx, obj = sample_frame_indices(len(sequence.frames), n_samples, rng)
    frames = [sequence.frames[i] for i in idx]
    sampled = PoseSequence(sequence.video_id, sequence.width, sequence.height, frames, sequence.label)
    return FrameSample(sampled, idx, obj)


def prepare_sequence(sequence, n_persons):
    """fill -> normalize -> array, the path every video takes before training."""
    return sequence_to_array(normalize_positions(fill_poses(sequence, n_persons)))
