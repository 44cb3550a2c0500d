"""Pose detection files (JSON lines) and dataset manifests."""

import json
import os

from .types import NUM_KEYPOINTS, MISSING, Keypoint, Pose, PoseFormatError, PoseSequence


def _parse_person(person, where):
    if len(person) != NUM_KEYPOINTS:
        raise PoseFormatError(f"{where}: expected {NUM_KEYPOINTS} keypoints, got {len(person)}")
    kps = []
    for j, kp in enumerate(person):
        if kp is None:
            kps.append(MISSING)
            continue
        if len(kp) != 3:
            raise PoseFormatError(f"{where} keypoint {j}: expected [x, y, confidence]")
        # confidence is parsed but unused downstream
        x, y, _conf = (float(v) for v in kp)
        kps.append(Keypoint(x, y, True))
    return Pose(tuple(kps))


def parse_pose_record(record):
    try:
        vid = str(record["video_id"])
        label = record.get("label")
        width, height = float(record["width"]), float(record["height"])
        raw_frames = record["frames"]
    except (KeyError, TypeError) as exc:
        raise PoseFormatError(f"pose record missing field: {exc}") from None
    frames = [
        [_parse_person(p, f"video {vid!r} frame {t} person {i}") for i, p in enumerate(frame)]
        for t, frame in enumerate(raw_frames)
    ]
    return PoseSequence(vid, width, height, frames, None if label is None else int(label))


def pose_record(seq, confidence=1.0):
    frames = [
        [
            [None if not k.present else [k.x, k.y, confidence] for k in p.keypoints]
            for p in frame
            if not p.is_virtual()
        ]
        for frame in seq.frames
    ]
    return {
        "video_id": seq.video_id,
        "label": seq.label,
        "width": seq.width,
        "height": seq.height,
        "frames": frames,
    }


def read_pose_file(path):
    sequences = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise PoseFormatError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            sequences.append(parse_pose_record(record))
    return sequences


def write_pose_file(path, sequences):
    with open(path, "w") as fh:
        for seq in sequences:
            fh.write(json.dumps(pose_record(seq), separators=(",", ":")))
            fh.write("\n")


def read_manifest(path):
    """Manifest entries with paths resolved against the manifest's directory."""
    with open(path) as fh:
        doc = json.load(fh)
    base = os.path.dirname(os.path.abspath(path))
    entries = doc["entries"] if isinstance(doc, dict) else doc
    out = []
    for e in entries:
        if e.get("split") not in ("train", "test"):
            raise PoseFormatError(f"manifest entry {e.get('video_id')!r}: split must be 'train' or 'test'")
        e = dict(e)
        for key in ("pose_path", "featmap_path", "raster_path"):
            if e.get(key):
                e[key] = os.path.join(base, e[key])
        out.append(e)
    return out


def write_manifest(path, entries, extra=None):
    doc = {"entries": list(entries)}
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
