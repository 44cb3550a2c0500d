import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psrn.numcore import ConfigurationError
from psrn.posedata import (
    DEFAULT_PARTITION,
    KEYPOINT_NAMES,
    KP,
    CapacityError,
    EmptyDatasetError,
    Keypoint,
    Pose,
    PoseFormatError,
    PoseSequence,
    SynthConfig,
    fill_poses,
    normalize_positions,
    parse_pose_record,
    partition_array,
    partition_parts,
    pose_record,
    read_manifest,
    read_pose_file,
    sample_frames,
    scan_max_persons,
    sequence_to_array,
    synth_generate,
    write_pose_file,
    write_synth,
)


def full_pose(x=10.0, y=20.0):
    return Pose.from_xy([(x + i, y + i) for i in range(14)])


def seq_with_counts(counts, vid="v"):
    return PoseSequence(vid, 320.0, 240.0, [[full_pose() for _ in range(c)] for c in counts])


# -- types -----------------------------------------------------------------


def test_keypoint_absent_must_be_origin():
    Keypoint(0.0, 0.0, False)
    with pytest.raises(PoseFormatError):
        Keypoint(1.0, 0.0, False)


def test_pose_has_fourteen_keypoints():
    assert len(KEYPOINT_NAMES) == 14
    with pytest.raises(PoseFormatError):
        Pose((Keypoint(),) * 13)


def test_partition_sizes():
    assert tuple(len(g) for g in DEFAULT_PARTITION.groups) == (4, 3, 3, 3, 3)
    assert DEFAULT_PARTITION.dims == (8, 6, 6, 6, 6)
    assert sum(DEFAULT_PARTITION.dims) == 32


# -- scan / fill -----------------------------------------------------------


def test_scan_max_persons():
    assert scan_max_persons([seq_with_counts([1, 2]), seq_with_counts([3]), seq_with_counts([1])]) == 3
    assert scan_max_persons([seq_with_counts([1, 1, 1])]) == 1
    with pytest.raises(EmptyDatasetError):
        scan_max_persons([seq_with_counts([0, 0])])


def test_fill_adds_virtual_poses_at_end():
    seq = seq_with_counts([1])
    out = fill_poses(seq, 3)
    assert len(out.frames[0]) == 3
    assert out.frames[0][0] == seq.frames[0][0]
    assert out.frames[0][1].is_virtual() and out.frames[0][2].is_virtual()
    assert all(k.x == 0 and k.y == 0 for p in out.frames[0][1:] for k in p.keypoints)


def test_fill_missing_left_arm_becomes_origin():
    coords = [(5.0 + i, 6.0 + i) for i in range(14)]
    for name in ("l_shoulder", "l_elbow", "l_wrist"):
        coords[KP[name]] = None
    pose = Pose.from_xy(coords)
    out = fill_poses(PoseSequence("v", 10, 10, [[pose]]), 1).frames[0][0]
    for i, k in enumerate(out.keypoints):
        if KEYPOINT_NAMES[i].startswith("l_") and KEYPOINT_NAMES[i][2:] in ("shoulder", "elbow", "wrist"):
            assert (k.x, k.y, k.present) == (0.0, 0.0, False)
        else:
            assert (k.x, k.y) == coords[i]


def test_fill_identity_when_complete():
    seq = seq_with_counts([2, 2])
    assert fill_poses(seq, 2).frames == seq.frames


def test_fill_capacity_error():
    with pytest.raises(CapacityError):
        fill_poses(seq_with_counts([3]), 2)


# -- normalization ---------------------------------------------------------


def _one_kp_seq(x, y, w=320, h=240):
    coords = [(x, y)] + [None] * 13
    return PoseSequence("v", w, h, [[Pose.from_xy(coords)]])


@pytest.mark.parametrize("x,y,ex,ey", [(160, 120, 0.5, 0.5), (0, 0, 0.0, 0.0), (320, 240, 1.0, 1.0), (330, -4, 1.0, 0.0)])
def test_normalize_examples(x, y, ex, ey):
    k = normalize_positions(_one_kp_seq(x, y)).frames[0][0].keypoints[0]
    assert (k.x, k.y) == (ex, ey)
    assert k.present


def test_normalize_keeps_absent_at_origin():
    k = normalize_positions(_one_kp_seq(10, 10)).frames[0][0].keypoints[5]
    assert (k.x, k.y, k.present) == (0.0, 0.0, False)


def test_normalize_rejects_bad_size():
    with pytest.raises(PoseFormatError):
        normalize_positions(_one_kp_seq(1, 1, w=0))


# -- partition -------------------------------------------------------------


def test_partition_constant_pose():
    parts = partition_parts(Pose.from_xy([(1.0, 1.0)] * 14))
    assert [p.shape[0] for p in parts] == [8, 6, 6, 6, 6]
    assert parts[0].tolist() == [1.0] * 8


def test_partition_virtual_pose_is_zero():
    parts = partition_parts(Pose.virtual())
    assert all(np.array_equal(p, np.zeros_like(p)) for p in parts)


def test_partition_matches_index_table():
    rng = np.random.default_rng(0)
    coords = rng.uniform(size=(14, 2))
    table = {
        0: ["head_top", "neck", "r_shoulder", "l_shoulder"],
        1: ["r_shoulder", "r_elbow", "r_wrist"],
        2: ["l_shoulder", "l_elbow", "l_wrist"],
        3: ["r_hip", "r_knee", "r_ankle"],
        4: ["l_hip", "l_knee", "l_ankle"],
    }
    parts = partition_parts(Pose.from_xy(coords.tolist()))
    batched = partition_array(coords[None, None])
    for g, names in table.items():
        expected = [c for n in names for c in coords[KEYPOINT_NAMES.index(n)]]
        assert parts[g].tolist() == expected
        assert batched[g][0, 0].tolist() == expected


# -- frame sampling --------------------------------------------------------


def test_sample_exact_length_returns_all_frames():
    seq = seq_with_counts([1] * 10)
    s = sample_frames(seq, 10, seed=3)
    assert s.indices.tolist() == list(range(10))
    assert s.object_frame in s.indices


def test_sample_is_deterministic():
    seq = seq_with_counts([1] * 40)
    a, b = sample_frames(seq, 10, seed=11), sample_frames(seq, 10, seed=11)
    assert a.indices.tolist() == b.indices.tolist() and a.object_frame == b.object_frame


def test_sample_strictly_increasing_for_long_videos():
    seq = seq_with_counts([1] * 25)
    for seed in range(50):
        idx = sample_frames(seq, 10, seed).indices
        assert np.all(np.diff(idx) > 0)


def test_sample_short_videos_length_and_order():
    rng = np.random.default_rng(0)
    for trial in range(1000):
        n = int(rng.integers(1, 10))
        seq = seq_with_counts([1] * n)
        s = sample_frames(seq, 10, seed=trial)
        assert len(s.sequence.frames) == 10
        assert np.all(np.diff(s.indices) >= 0)
        assert s.indices.max() < n


def test_sample_empty_video_errors():
    with pytest.raises(ValueError):
        sample_frames(seq_with_counts([]), 10, 0)


# -- properties ------------------------------------------------------------


frame_strategy = st.lists(
    st.lists(
        st.one_of(st.none(), st.tuples(st.floats(-20, 340), st.floats(-20, 260))),
        min_size=14,
        max_size=14,
    ),
    min_size=0,
    max_size=4,
)


@settings(max_examples=1000, deadline=None)
@given(frame_strategy)
def test_fill_idempotent_and_bounded(frame):
    seq = PoseSequence("v", 320.0, 240.0, [[Pose.from_xy(p) for p in frame]])
    once = fill_poses(seq, 4)
    assert fill_poses(once, 4).frames == once.frames
    arr = sequence_to_array(normalize_positions(once))
    assert arr.shape == (1, 4, 14, 2)
    assert np.all((arr >= 0) & (arr <= 1))


# -- file formats ----------------------------------------------------------


def test_pose_record_round_trip(tmp_path):
    coords = [(1.5, 2.5)] * 14
    coords[3] = None
    seq = PoseSequence("vid", 320.0, 240.0, [[Pose.from_xy(coords)], []], label=2)
    path = tmp_path / "p.jsonl"
    write_pose_file(path, [seq])
    (back,) = read_pose_file(path)
    assert back == seq
    rec = json.loads(path.read_text())
    assert rec["frames"][0][0][3] is None
    assert rec["frames"][0][0][0] == [1.5, 2.5, 1.0]


def test_pose_record_ignores_confidence_and_validates():
    rec = {"video_id": "a", "label": None, "width": 10, "height": 10,
           "frames": [[[[1, 2, 0.3]] + [None] * 13]]}
    seq = parse_pose_record(rec)
    assert seq.label is None and seq.frames[0][0].keypoints[0] == Keypoint(1.0, 2.0, True)
    rec["frames"][0][0] = rec["frames"][0][0][:5]
    with pytest.raises(PoseFormatError):
        parse_pose_record(rec)


# -- synthetic data --------------------------------------------------------


def test_synth_counts_and_balance():
    ds = synth_generate(SynthConfig(num_classes=4, train_per_class=50, test_per_class=0, seed=1))
    labels = [s.label for s in ds.sequences]
    assert len(ds.sequences) == 200
    assert np.bincount(labels).tolist() == [50] * 4


def test_synth_rejects_impossible_ambiguity():
    with pytest.raises(ConfigurationError):
        SynthConfig(num_classes=3, ambiguous_pairs=2)


def test_synth_files_are_deterministic(tmp_path):
    cfg = SynthConfig(num_classes=3, train_per_class=3, test_per_class=2, seed=5, raster=True)
    m1 = write_synth(tmp_path / "a", cfg)
    m2 = write_synth(tmp_path / "b", cfg)
    files_a = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()
    entries = read_manifest(m1)
    assert {e["split"] for e in entries} == {"train", "test"}
    assert len(entries) == 15
    assert all(set(e) >= {"video_id", "split", "pose_path", "featmap_path"} for e in entries)


def test_synth_ambiguous_pair_shares_family_but_not_pattern():
    from psrn.posedata.synth import class_family, class_pattern_bit

    cfg = SynthConfig(num_classes=4, ambiguous_pairs=1)
    assert [class_family(cfg, c) for c in range(4)] == [0, 1, 2, 2]
    assert [class_pattern_bit(cfg, c) for c in range(4)] == [0, 0, 0, 1]
