"""Losses, schedules, staged training, evaluation and ablations."""

from .data import Batch, DataError, Video, VideoSet, build_splits, dataset_from_synth, load_dataset, make_batch
from .evaluate import (
    BRANCHES,
    EvalReport,
    attention_rows,
    confusion_matrix,
    evaluate,
    posteriors,
    write_attention_csv,
    write_trace_csv,
)
from .losses import DEFAULT_WEIGHT_DECAY, LOSS_NAMES, LossBreakdown, loss_graph, regularization, total_loss
from .schedule import CONSTANT, WARMUP, LrSchedule, lr_at_step
from .stages import Stage, StagePlan, StageResult, TrainingError, desk_plan, full_plan, run_plan, run_stage
