"""Synthetic multi-person pose videos with paired feature maps.

Each class owns a trajectory family for one "target" person: an arm posture
level plus the direction and size of a short body sway at the start of the
clip. The remaining persons are smaller distractors that random-walk and act
out a randomly drawn family of their own, so picking the right person matters.
Classes inside an ambiguous pair share the same family; only a pattern
planted in the feature map tells them apart.
"""

import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from ..numcore.params import ConfigurationError
from ..objectstream import FeatureMap, save_feature_map
from .io import write_manifest, write_pose_file
from .types import KP, MISSING, NUM_KEYPOINTS, Keypoint, Pose, PoseSequence

# body template in body-height units, y pointing down, origin at the pelvis
_TEMPLATE = np.array([
    (0.00, -1.00),  # head_top
    (0.00, -0.78),  # neck
    (-0.17, -0.72), (-0.22, -0.45), (-0.25, -0.20),  # right arm
    (0.17, -0.72), (0.22, -0.45), (0.25, -0.20),  # left arm
    (-0.10, 0.00), (-0.12, 0.42), (-0.12, 0.85),  # right leg
    (0.10, 0.00), (0.12, 0.42), (0.12, 0.85),  # left leg
])
_UPPER_ARM = 0.27
_FOREARM = 0.25


@dataclass
class SynthConfig:
    num_classes: int = 4
    num_persons: int = 2
    num_frames: int = 10
    train_per_class: int = 50
    test_per_class: int = 20
    fmap_shape: tuple = (4, 4, 32)
    ambiguous_pairs: int = 0
    image_size: tuple = (320, 240)
    sway_frames: int = 4
    sway_amplitude: float = 0.06
    sway_gain_range: tuple = (1.0, 1.0)
    late_jitter: float = 0.0
    target_scale: tuple = (0.28, 0.38)
    distractor_ratio: tuple = (0.55, 0.8)
    keypoint_noise: float = 1.0
    dropout: float = 0.02
    pattern_strength: float = 1.5
    raster: bool = False
    raster_scale: int = 4
    seed: int = 0

    def __post_init__(self):
        self.fmap_shape = tuple(self.fmap_shape)
        self.image_size = tuple(self.image_size)
        self.sway_gain_range = tuple(self.sway_gain_range)
        self.target_scale = tuple(self.target_scale)
        self.distractor_ratio = tuple(self.distractor_ratio)
        if self.num_classes < 2:
            raise ConfigurationError("need at least 2 classes")
        if self.num_persons < 1:
            raise ConfigurationError("need at least 1 person per frame")
        if self.ambiguous_pairs < 0 or 2 * self.ambiguous_pairs > self.num_classes:
            raise ConfigurationError(
                f"{self.ambiguous_pairs} ambiguous pairs need {2 * self.ambiguous_pairs} classes, "
                f"only {self.num_classes} configured"
            )
        if self.num_frames < 1:
            raise ConfigurationError("videos need at least one frame")

    @property
    def num_families(self):
        return self.num_classes - self.ambiguous_pairs


def class_family(cfg, label):
    """Family index of a class; the last ``2 * ambiguous_pairs`` classes pair up."""
    first_pair = cfg.num_classes - 2 * cfg.ambiguous_pairs
    if label < first_pair:
        return label
    return first_pair + (label - first_pair) // 2


def class_pattern_bit(cfg, label):
    """1 for the second member of an ambiguous pair, else 0."""
    first_pair = cfg.num_classes - 2 * cfg.ambiguous_pairs
    return int(label >= first_pair and (label - first_pair) % 2 == 1)


def family_attributes(cfg, family):
    """(posture level in [0, 1], sway sign, sway gain) of a family."""
    n_post = math.ceil(math.sqrt(cfg.num_families))
    p, m = family % n_post, family // n_post
    level = p / max(n_post - 1, 1)
    sign = 1.0 if m % 2 == 0 else -1.0
    gain = 1.0 + m // 2
    return level, sign, gain


def _arm(shoulder, side, level):
    # level 0: hanging arm, level 1: raised arm
    angle = math.radians(12 + 140 * level)
    direction = np.array([side * math.sin(angle), math.cos(angle)])
    elbow = shoulder + _UPPER_ARM * direction
    fore = math.radians(12 + 160 * level)
    wrist = elbow + _FOREARM * np.array([side * math.sin(fore), math.cos(fore)])
    return elbow, wrist


def _body(level):
    body = _TEMPLATE.copy()
    for shoulder, elbow, wrist, side in (("r_shoulder", "r_elbow", "r_wrist", -1), ("l_shoulder", "l_elbow", "l_wrist", 1)):
        e, w = _arm(body[KP[shoulder]], side, level)
        body[KP[elbow]] = e
        body[KP[wrist]] = w
    return body


def _person_track(cfg, rng, family, scale, center, walk, strength=1.0):
    """(frames, 14, 2) pixel coordinates for one person."""
    W, H = cfg.image_size
    level, sign, gain = family_attributes(cfg, family)
    body = _body(level) * scale * H
    F = cfg.num_frames
    t = np.arange(F)
    bump = np.where(t <= cfg.sway_frames, np.sin(np.pi * np.minimum(t, cfg.sway_frames) / cfg.sway_frames), 0.0)
    sway = strength * sign * gain * cfg.sway_amplitude * W * (scale / 0.33) * bump
    drift = np.cumsum(rng.normal(0.0, walk, size=(F, 2)), axis=0) if walk else np.zeros((F, 2))
    # class-independent limb wobble
    wobble_freq = rng.uniform(0.5, 2.0, size=NUM_KEYPOINTS)
    wobble_phase = rng.uniform(0, 2 * np.pi, size=NUM_KEYPOINTS)
    wobble = 0.02 * scale * H * np.sin(2 * np.pi * wobble_freq[None, :] * t[:, None] / F + wobble_phase[None, :])
    # class-independent shuffle after the sway, so early frames must be remembered
    steps = rng.normal(0.0, cfg.late_jitter * W * (scale / 0.33), size=F)
    jitter = np.cumsum(np.where(t > cfg.sway_frames, steps, 0.0))
    coords = np.empty((F, NUM_KEYPOINTS, 2))
    coords[:] = body[None] + np.asarray(center)[None, None, :]
    coords[:, :, 0] += (sway + jitter)[:, None] + drift[:, None, 0] + wobble
    coords[:, :, 1] += drift[:, None, 1]
    coords += rng.normal(0.0, cfg.keypoint_noise, size=coords.shape)
    return coords


def _to_pose(coords, drop_mask):
    kps = tuple(
        MISSING if drop_mask[j] else Keypoint(round(float(coords[j, 0]), 3), round(float(coords[j, 1]), 3), True)
        for j in range(NUM_KEYPOINTS)
    )
    return Pose(kps)


def generate_video(cfg, label, split, index):
    """One synthetic video: (PoseSequence, feature map, raster or None, target slot)."""
    split_code = 0 if split == "train" else 1
    rng = np.random.default_rng([cfg.seed, split_code, label, index])
    W, H = cfg.image_size
    family = class_family(cfg, label)

    t_scale = rng.uniform(*cfg.target_scale)
    t_center = (rng.uniform(0.3, 0.7) * W, rng.uniform(0.55, 0.65) * H)
    strength = rng.uniform(*cfg.sway_gain_range)
    tracks = [_person_track(cfg, rng, family, t_scale, t_center, walk=0.0, strength=strength)]
    for _ in range(cfg.num_persons - 1):
        d_scale = t_scale * rng.uniform(*cfg.distractor_ratio)
        d_center = (rng.uniform(0.1, 0.9) * W, rng.uniform(0.5, 0.75) * H)
        d_family = int(rng.integers(cfg.num_families))
        d_strength = rng.uniform(*cfg.sway_gain_range)
        tracks.append(_person_track(cfg, rng, d_family, d_scale, d_center, walk=0.006 * W, strength=d_strength))

    target = int(rng.integers(cfg.num_persons))
    order = [None] * cfg.num_persons
    order[target] = 0
    others = iter(range(1, cfg.num_persons))
    for slot in range(cfg.num_persons):
        if order[slot] is None:
            order[slot] = next(others)

    frames = []
    for f in range(cfg.num_frames):
        frame = []
        for slot in range(cfg.num_persons):
            k = order[slot]
            rate = cfg.dropout * (0.5 if k == 0 else 1.0)
            drop = rng.random(NUM_KEYPOINTS) < rate
            frame.append(_to_pose(tracks[k][f], drop))
        frames.append(frame)
    vid = f"{split}_{label:02d}_{index:04d}"
    seq = PoseSequence(vid, float(W), float(H), frames, label)

    fmap, raster = _feature_map(cfg, rng, class_pattern_bit(cfg, label))
    return seq, fmap, raster, target


def _patterns(cfg):
    prng = np.random.default_rng([cfg.seed, 7919])
    D = cfg.fmap_shape[2]
    pats = prng.choice([-1.0, 1.0], size=(2, D))
    colors = prng.uniform(-1, 1, size=(2, 3))
    return pats, colors


def _feature_map(cfg, rng, bit):
    Hf, Wf, D = cfg.fmap_shape
    pats, colors = _patterns(cfg)
    grid = rng.normal(0.0, 1.0, size=(Hf, Wf, D))
    cell = int(rng.integers(Hf * Wf))
    grid[cell // Wf, cell % Wf] += cfg.pattern_strength * pats[bit]
    grid = grid.astype(np.float32).astype(np.float64)
    raster = None
    if cfg.raster:
        s = cfg.raster_scale
        raster = rng.normal(0.0, 0.3, size=(Hf * s, Wf * s, 3))
        r, c = cell // Wf, cell % Wf
        raster[r * s:(r + 1) * s, c * s:(c + 1) * s] += colors[bit]
        raster = raster.astype(np.float32).astype(np.float64)
    return FeatureMap(grid), (FeatureMap(raster) if raster is not None else None)


@dataclass
class SynthDataset:
    config: SynthConfig
    sequences: list = field(default_factory=list)
    feature_maps: list = field(default_factory=list)
    rasters: list = field(default_factory=list)
    entries: list = field(default_factory=list)


def synth_generate(cfg):
    """Build the whole dataset in memory, train split first, class-major."""
    ds = SynthDataset(cfg)
    for split, per_class in (("train", cfg.train_per_class), ("test", cfg.test_per_class)):
        for label in range(cfg.num_classes):
            for i in range(per_class):
                seq, fmap, raster, target = generate_video(cfg, label, split, i)
                ds.sequences.append(seq)
                ds.feature_maps.append(fmap)
                ds.rasters.append(raster)
                entry = {
                    "video_id": seq.video_id,
                    "split": split,
                    "label": label,
                    "target_person": target,
                    "pose_path": "poses.jsonl",
                    "featmap_path": f"featmaps/{seq.video_id}.fmap",
                }
                if raster is not None:
                    entry["raster_path"] = f"rasters/{seq.video_id}.fmap"
                ds.entries.append(entry)
    return ds


def write_synth(out_dir, cfg):
    """Write poses.jsonl, featmaps/, optional rasters/ and manifest.json."""
    ds = synth_generate(cfg)
    os.makedirs(os.path.join(out_dir, "featmaps"), exist_ok=True)
    if cfg.raster:
        os.makedirs(os.path.join(out_dir, "rasters"), exist_ok=True)
    write_pose_file(os.path.join(out_dir, "poses.jsonl"), ds.sequences)
    for entry, fmap, raster in zip(ds.entries, ds.feature_maps, ds.rasters):
        save_feature_map(os.path.join(out_dir, entry["featmap_path"]), fmap)
        if raster is not None:
            save_feature_map(os.path.join(out_dir, entry["raster_path"]), raster)
    manifest = os.path.join(out_dir, "manifest.json")
    write_manifest(manifest, ds.entries, extra={"synth_config": asdict(cfg)})
    return manifest
