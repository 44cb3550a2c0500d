"""Prepared video sets and minibatch assembly."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..objectstream import extract_objects, load_feature_map
from ..posedata.io import read_manifest, read_pose_file
from ..posedata.preprocess import prepare_sequence, sample_frame_indices, scan_max_persons


class DataError(ValueError):
    pass


@dataclass
class Video:
    video_id: str
    label: int
    poses: np.ndarray  # (F, N, 14, 2), filled and normalized
    objects: Optional[np.ndarray] = None  # (H*W, D)
    raster: Optional[np.ndarray] = None  # (H, W, C)
    target_person: Optional[int] = None


@dataclass
class VideoSet:
    videos: list = field(default_factory=list)
    n_persons: int = 0

    def __len__(self):
        return len(self.videos)

    @property
    def labels(self):
        return np.array([v.label for v in self.videos], dtype=np.int64)


@dataclass
class Batch:
    poses: np.ndarray  # (B, T, N, 14, 2)
    labels: np.ndarray
    video_ids: list
    objects: Optional[np.ndarray] = None
    rasters: Optional[np.ndarray] = None
    frame_indices: Optional[np.ndarray] = None
    object_frames: Optional[list] = None


def build_splits(sequences, entries, feature_maps=None, rasters=None):
    """Fill/normalize every sequence with the dataset-wide person count N.

    ``entries`` are manifest entries aligned with ``sequences``; feature maps
    and rasters are optional aligned lists.
    """
    n_persons = scan_max_persons(sequences)
    splits = {"train": VideoSet(n_persons=n_persons), "test": VideoSet(n_persons=n_persons)}
    for i, (seq, entry) in enumerate(zip(sequences, entries)):
        label = seq.label if seq.label is not None else entry.get("label")
        if label is None:
            raise DataError(f"video {seq.video_id!r} has no label")
        fmap = feature_maps[i] if feature_maps is not None else None
        raster = rasters[i] if rasters is not None else None
        splits[entry["split"]].videos.append(
            Video(
                seq.video_id,
                int(label),
                prepare_sequence(seq, n_persons),
                None if fmap is None else extract_objects(fmap),
                None if raster is None else raster.values,
                entry.get("target_person"),
            )
        )
    return splits


def load_dataset(manifest_path):
    """Read a manifest, its pose files and feature maps into train/test sets."""
    entries = read_manifest(manifest_path)
    by_file = {}
    for e in entries:
        by_file.setdefault(e["pose_path"], None)
    pool = {}
    for path in by_file:
        for seq in read_pose_file(path):
            pool[seq.video_id] = seq
    sequences = []
    for e in entries:
        try:
            sequences.append(pool[e["video_id"]])
        except KeyError:
            raise DataError(f"video {e['video_id']!r} not found in {e['pose_path']}") from None
    fmaps = [load_feature_map(e["featmap_path"]) if e.get("featmap_path") else None for e in entries]
    rasters = [load_feature_map(e["raster_path"]) if e.get("raster_path") else None for e in entries]
    return build_splits(sequences, entries, fmaps, rasters if any(r is not None for r in rasters) else None)


def dataset_from_synth(ds):
    return build_splits(ds.sequences, ds.entries, ds.feature_maps, ds.rasters if ds.config.raster else None)


def make_batch(videos, n_frames, rngs, need_objects=True, need_rasters=False):
    """Sample ``n_frames`` per video (one generator per video) and stack."""
    poses, idxs, obj_frames = [], [], []
    for v, rng in zip(videos, rngs):
        idx, obj = sample_frame_indices(v.poses.shape[0], n_frames, rng)
        poses.append(v.poses[idx])
        idxs.append(idx)
        obj_frames.append(obj)
    objects = rasters = None
    if need_objects:
        missing = [v.video_id for v in videos if v.objects is None]
        if missing:
            raise DataError(f"relation loss is active but videos lack feature maps: {missing[:5]}")
        objects = np.stack([v.objects for v in videos])
    if need_rasters:
        missing = [v.video_id for v in videos if v.raster is None]
        if missing:
            raise DataError(f"conv object stream needs rasters, missing for: {missing[:5]}")
        rasters = np.stack([v.raster for v in videos])
    return Batch(
        np.stack(poses),
        np.array([v.label for v in videos], dtype=np.int64),
        [v.video_id for v in videos],
        objects,
        rasters,
        np.stack(idxs),
        obj_frames,
    )
