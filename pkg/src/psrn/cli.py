"""``psrn`` command line: synth, train, eval, gradcheck, ablate, inspect.

Every command reads an optional JSON config (``--config``), applies flag
overrides, writes the merged config to ``<out>/config.json`` and puts its
reports in ``<out>``:

    data/                 synthetic dataset (synth)
    stage{1,2,3}.ckpt     checkpoints (train)
    trace_stage{k}.csv    per-stage loss traces; trace.csv concatenates them
    eval_{split}.json     EvalReport (eval)
    gradcheck.json        per-module errors (gradcheck)
    ablation.json/.txt    accuracy grid (ablate)
    attention.csv         per-frame attention weights (inspect)
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .diagnostics import THRESHOLD, run_checks
from .model import PSRN
from .numcore import ConfigurationError, load_checkpoint, save_checkpoint
from .posedata import write_synth
from .runconfig import RunConfig
from .training import (
    attention_rows,
    evaluate,
    load_dataset,
    run_stage,
    write_attention_csv,
    write_trace_csv,
)
from .training.ablation import ablation_harness, format_table
from .training.evaluate import TRACE_COLUMNS


class DependencyError(RuntimeError):
    pass


def _out(args, *parts):
    return os.path.join(args.out, *parts)


def _config(args):
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    os.makedirs(args.out, exist_ok=True)
    with open(_out(args, "config.json"), "w") as fh:
        fh.write(cfg.to_json() + "\n")
    return cfg


def _manifest(args, cfg):
    path = cfg.manifest or _out(args, "data", "manifest.json")
    if not os.path.exists(path):
        raise DependencyError(f"no dataset at {path}; run `psrn synth` first or set 'manifest' in the config")
    return path


def _num_classes(splits):
    labels = np.concatenate([splits["train"].labels, splits["test"].labels])
    return int(labels.max()) + 1


def _model(cfg, splits):
    return PSRN(cfg.model_config(_num_classes(splits)), seed=cfg.init_seed)


def _load_into(model, path):
    model.params.load_state_dict(load_checkpoint(path), strict=True)


def _latest_checkpoint(args):
    if args.checkpoint:
        return args.checkpoint
    for k in (3, 2, 1):
        path = _out(args, f"stage{k}.ckpt")
        if os.path.exists(path):
            return path
    raise DependencyError(f"no checkpoint in {args.out}; run `psrn train` first or pass --checkpoint")


# -- commands ----------------------------------------------------------------


def cmd_synth(args):
    cfg = _config(args)
    scfg = cfg.synth_config()
    manifest = write_synth(_out(args, "data"), scfg)
    n_train = scfg.num_classes * scfg.train_per_class
    n_test = scfg.num_classes * scfg.test_per_class
    print(f"wrote {n_train} train / {n_test} test videos, {scfg.num_classes} classes, "
          f"{scfg.num_persons} persons, feature maps {scfg.fmap_shape}")
    print(f"manifest: {manifest}")
    return 0


def _combine_traces(args):
    rows = []
    for k in (1, 2, 3):
        path = _out(args, f"trace_stage{k}.csv")
        if os.path.exists(path):
            with open(path, newline="") as fh:
                rows.extend(csv.DictReader(fh))
    with open(_out(args, "trace.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TRACE_COLUMNS)
        w.writeheader()
        w.writerows(rows)


def cmd_train(args):
    cfg = _config(args)
    splits = load_dataset(_manifest(args, cfg))
    model = _model(cfg, splits)
    plan = cfg.stage_plan()
    stages = [1, 2, 3] if args.stage == "all" else [int(args.stage)]
    first = stages[0]
    if first > 1:
        prior = args.checkpoint or _out(args, f"stage{first - 1}.ckpt")
        if not os.path.exists(prior):
            raise DependencyError(f"stage {first} needs the stage {first - 1} checkpoint ({prior}); "
                                  f"run `psrn train --stage {first - 1}` first")
        _load_into(model, prior)
    for k in stages:
        stage = plan[k - 1]
        res = run_stage(model, stage, splits["train"], cfg.sampling_seed, batch_size=cfg.batch_size,
                        n_frames=cfg.n_frames, weight_decay=cfg.weight_decay, trace_every=cfg.trace_every)
        save_checkpoint(_out(args, f"stage{k}.ckpt"), model.params)
        write_trace_csv(_out(args, f"trace_stage{k}.csv"), res.trace)
        last = res.trace[-1] if res.trace else {}
        print(f"stage {k}: {stage.iterations} iterations, final total loss {last.get('total', float('nan')):.4f}")
    _combine_traces(args)
    return 0


def cmd_eval(args):
    cfg = _config(args)
    splits = load_dataset(_manifest(args, cfg))
    model = _model(cfg, splits)
    _load_into(model, _latest_checkpoint(args))
    report = evaluate(model, splits[args.split], seed=cfg.eval_seed, n_frames=cfg.n_frames)
    path = _out(args, f"eval_{args.split}.json")
    with open(path, "w") as fh:
        fh.write(report.to_json() + "\n")
    for branch, acc in report.accuracies.items():
        print(f"{branch:12s} {acc:.4f}")
    print(f"report: {path}")
    return 0


def cmd_gradcheck(args):
    _config(args)
    results = run_checks()
    ok = all(r.passed for r in results)
    for r in results:
        print(f"{r.module:18s} {r.error:.3e}  {'ok' if r.passed else 'FAIL'}")
    print(f"verdict: {'PASS' if ok else 'FAIL'} (threshold {THRESHOLD:g})")
    with open(_out(args, "gradcheck.json"), "w") as fh:
        json.dump({"threshold": THRESHOLD, "passed": ok,
                   "modules": {r.module: r.error for r in results}}, fh, indent=1, sort_keys=True)
    return 0 if ok else 1


def cmd_ablate(args):
    cfg = _config(args)
    splits = load_dataset(_manifest(args, cfg))
    base = cfg.model_config(_num_classes(splits))
    results = ablation_harness(splits, base, cfg.stage_plan(), seeds=cfg.ablation_seeds,
                               batch_size=cfg.batch_size, n_frames=cfg.n_frames,
                               eval_seed=cfg.eval_seed, weight_decay=cfg.weight_decay)
    table = format_table(results)
    print(table)
    with open(_out(args, "ablation.txt"), "w") as fh:
        fh.write(table + "\n")
    with open(_out(args, "ablation.json"), "w") as fh:
        json.dump(results, fh, indent=1, sort_keys=True)
    return 0


def cmd_inspect(args):
    cfg = _config(args)
    splits = load_dataset(_manifest(args, cfg))
    model = _model(cfg, splits)
    _load_into(model, _latest_checkpoint(args))
    videos = splits[args.split]
    rows, alphas = attention_rows(model, videos, seed=cfg.eval_seed, n_frames=cfg.n_frames)
    write_attention_csv(_out(args, "attention.csv"), rows)
    means = np.array([a.mean(axis=0) for a in alphas])
    print("mean attention per person slot: " + " ".join(f"{m:.3f}" for m in means.mean(axis=0)))
    targets = [v.target_person for v in videos.videos]
    if all(t is not None for t in targets):
        hits = [m[t] > np.delete(m, t).max() for m, t in zip(means, targets)] if means.shape[1] > 1 else []
        if hits:
            print(f"target person has the largest mean weight in {np.mean(hits):.1%} of videos")
    print(f"attention: {_out(args, 'attention.csv')}")
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "ablate": cmd_ablate,
    "inspect": cmd_inspect,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config; flags override its values")
    common.add_argument("--out", default="run", help="output directory (default: ./run)")
    common.add_argument("--seed", type=int, help="set every named seed")
    common.add_argument("--checkpoint", help="checkpoint to load instead of the latest in --out")

    parser = argparse.ArgumentParser(prog="psrn", description="Pose-based two-stream relational network")
    parser.add_argument("--version", action="version", version=f"psrn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    train = sub.add_parser("train", parents=[common], help="run one or all training stages")
    train.add_argument("--stage", choices=["1", "2", "3", "all"], default="all")
    ev = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint")
    ev.add_argument("--split", choices=["train", "test"], default="test")
    sub.add_parser("gradcheck", parents=[common], help="finite-difference check of every module")
    sub.add_parser("ablate", parents=[common], help="uni/bi x attention ablation grid")
    ins = sub.add_parser("inspect", parents=[common], help="dump attention weights to CSV")
    ins.add_argument("--split", choices=["train", "test"], default="test")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (DependencyError, ConfigurationError, ValueError, OSError) as exc:
        print(f"psrn {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
