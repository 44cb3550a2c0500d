"""Per-branch accuracies, confusion matrix and attention dumps."""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from ..numcore.ops import _softmax_values
from .data import DataError, make_batch

BRANCHES = ("position", "velocity", "pose_fusion", "relation")


@dataclass
class EvalReport:
    accuracies: dict
    confusion: np.ndarray  # rows: true class, columns: predicted (relation branch)
    misclassified: list = field(default_factory=list)

    @property
    def total(self):
        return int(self.confusion.sum())

    @property
    def accuracy(self):
        return float(np.trace(self.confusion) / self.confusion.sum())

    def to_json(self):
        return json.dumps(
            {
                "accuracies": self.accuracies,
                "confusion": self.confusion.astype(int).tolist(),
                "misclassified": self.misclassified,
            },
            indent=1,
            sort_keys=True,
        )


def confusion_matrix(labels, predictions, num_classes):
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(labels), np.asarray(predictions)), 1)
    return cm


def _video_rng(seed, repeat, i):
    return np.random.default_rng([seed, repeat, i])


def posteriors(model, videos, seed=0, n_frames=10, repeats=1, chunk=64, relation=True):
    """Class posteriors per branch, averaged over ``repeats`` frame samplings."""
    n, C = len(videos.videos), model.cfg.num_classes
    post = {b: np.zeros((n, C)) for b in ("position", "velocity", "relation")}
    alphas = [None] * n
    need_obj = relation and model.cfg.object_source == "featmap"
    need_ras = relation and model.cfg.object_source == "conv"
    for r in range(repeats):
        for start in range(0, n, chunk):
            idx = range(start, min(n, start + chunk))
            chosen = [videos.videos[i] for i in idx]
            batch = make_batch(chosen, n_frames, [_video_rng(seed, r, i) for i in idx], need_obj, need_ras)
            out = model.forward(batch.poses, batch.objects, batch.rasters, relation=relation)
            sl = slice(start, start + len(chosen))
            post["position"][sl] += _softmax_values(out.logits_pos.values)
            post["velocity"][sl] += _softmax_values(out.logits_vel.values)
            if relation:
                post["relation"][sl] += _softmax_values(out.logits_rel.values)
            if r == 0:
                for j, i in enumerate(idx):
                    alphas[i] = out.alpha[j]
    for b in post:
        post[b] /= repeats
    post["pose_fusion"] = 0.5 * (post["position"] + post["velocity"])
    return post, alphas


def evaluate(model, videos, seed=0, n_frames=10, repeats=1):
    """Accuracies of every branch; the final prediction is the relation branch."""
    if len(videos) == 0:
        raise DataError("cannot evaluate an empty split")
    post, _ = posteriors(model, videos, seed, n_frames, repeats)
    labels = videos.labels
    accs = {b: float(np.mean(np.argmax(post[b], axis=1) == labels)) for b in BRANCHES}
    final = np.argmax(post["relation"], axis=1)
    cm = confusion_matrix(labels, final, model.cfg.num_classes)
    wrong = [v.video_id for v, p in zip(videos.videos, final) if p != v.label]
    return EvalReport(accs, cm, wrong)


def attention_rows(model, videos, seed=0, n_frames=10):
    """(video_id, t, person_index, alpha) rows for every evaluated frame."""
    _, alphas = posteriors(model, videos, seed, n_frames, relation=False)
    rows = []
    for v, a in zip(videos.videos, alphas):
        for t in range(a.shape[0]):
            for i in range(a.shape[1]):
                rows.append((v.video_id, t, i, float(a[t, i])))
    return rows, alphas


def write_attention_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["video_id", "t", "person_index", "alpha"])
        for vid, t, i, a in rows:
            w.writerow([vid, t, i, repr(a)])


TRACE_COLUMNS = ("step", "stage", "lr", "L_pos", "L_vel", "L_rel", "reg", "total")


def write_trace_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TRACE_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(row[k]) if isinstance(row[k], float) else row[k]) for k in TRACE_COLUMNS})
