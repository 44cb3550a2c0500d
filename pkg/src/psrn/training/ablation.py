"""Stream x architecture ablation grid (uni/bi LSTM, attention on/off)."""

from dataclasses import replace

import numpy as np

from ..model import PSRN
from .evaluate import BRANCHES, evaluate
from .stages import run_plan

DEFAULT_GRID = (
    ("uni-LSTM+Attention", {"bidirectional": False, "attention": True}),
    ("bi-LSTM", {"bidirectional": True, "attention": False}),
    ("bi-LSTM+Attention", {"bidirectional": True, "attention": True}),
)

ROW_LABELS = {
    "position": "Pose Position",
    "velocity": "Pose Velocity",
    "pose_fusion": "Pose Stream Fusion",
    "relation": "Two-stream Fusion",
}


def ablation_harness(splits, base_cfg, plan, grid=DEFAULT_GRID, seeds=(0,), batch_size=16,
                     n_frames=10, eval_seed=0, weight_decay=4e-5):
    """Train and evaluate every (configuration, seed); return per-run and mean accuracies.

    Returns ``{label: {"runs": [accuracy dicts], "mean": {branch: acc}}}``.
    """
    results = {}
    for label, overrides in grid:
        cfg = replace(base_cfg, **overrides)
        runs = []
        for seed in seeds:
            model = PSRN(cfg, seed=seed)
            run_plan(model, plan, splits["train"], seed, batch_size=batch_size, n_frames=n_frames,
                     weight_decay=weight_decay, trace_every=10**9)
            runs.append(evaluate(model, splits["test"], seed=eval_seed, n_frames=n_frames).accuracies)
        mean = {b: float(np.mean([r[b] for r in runs])) for b in BRANCHES}
        results[label] = {"runs": runs, "mean": mean}
    return results


def format_table(results):
    """Stream rows x configuration columns, accuracies in percent."""
    labels = list(results)
    lines = ["Stream".ljust(22) + "".join(l.rjust(22) for l in labels)]
    for b in BRANCHES:
        lines.append(ROW_LABELS[b].ljust(22) + "".join(f"{100 * results[l]['mean'][b]:22.1f}" for l in labels))
    return "\n".join(lines)
