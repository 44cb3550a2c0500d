"""Generate the toy dataset, run the three training stages, evaluate, and
look at where attention goes.

    python3 demos/quickstart.py
"""

import time

import numpy as np

from psrn import PSRN
from psrn.posedata import synth_generate
from psrn.runconfig import RunConfig
from psrn.training import attention_rows, dataset_from_synth, evaluate, run_plan

cfg = RunConfig()
splits = dataset_from_synth(synth_generate(cfg.synth_config()))
print(f"{len(splits['train'])} train / {len(splits['test'])} test videos")

model = PSRN(cfg.model_config(4), seed=cfg.init_seed)
start = time.perf_counter()
results = run_plan(model, cfg.stage_plan(), splits["train"], cfg.sampling_seed,
                   batch_size=cfg.batch_size, n_frames=cfg.n_frames, weight_decay=cfg.weight_decay)
print(f"trained {sum(cfg.iterations)} iterations in {time.perf_counter() - start:.0f}s")
for res in results:
    first, last = res.trace[0]["total"], res.trace[-1]["total"]
    print(f"  stage {res.stage}: loss {first:.3f} -> {last:.3f}")

report = evaluate(model, splits["test"], seed=cfg.eval_seed)
for branch, acc in report.accuracies.items():
    print(f"{branch:12s} {acc:.3f}")
print("confusion (rows true, columns predicted):")
print(report.confusion)

_, alphas = attention_rows(model, splits["test"])
target = [v.target_person for v in splits["test"].videos]
weight = np.mean([a.mean(axis=0)[t] for a, t in zip(alphas, target)])
print(f"mean attention on the acting person: {weight:.2f}")
