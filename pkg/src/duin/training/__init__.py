"""
Training Module

Training loops for the three stages (VQ-VAE reconstruction, masked
modeling, classification), evaluation metrics and channel contribution.
"""

from .common import (
    DivergenceError,
    PrerequisiteError,
    Stream,
    TrainingError,
    stream_generator,
    stream_rng,
)
from .contribution import (
    ContributionScores,
    channel_contribution,
    select_top_channels,
    write_contrib_csv,
)
from .downstream import (
    FinetuneResult,
    TrialSplits,
    build_trial_splits,
    channel_count_sweep,
    evaluate,
    finetune,
    init_classifier,
)
from .mae import compute_targets, freeze, mae_output_dim, target_indices, train_mae
from .metrics import (
    EvalMetrics,
    MetricsWriter,
    RunningMean,
    classification_metrics,
    read_metrics,
    summarize_seeds,
)
from .vqvae import StepResult, TrainHistory, train_vqvae, vqvae_step

__all__ = [
    "ContributionScores",
    "DivergenceError",
    "EvalMetrics",
    "FinetuneResult",
    "MetricsWriter",
    "PrerequisiteError",
    "RunningMean",
    "StepResult",
    "Stream",
    "TrainHistory",
    "TrainingError",
    "TrialSplits",
    "build_trial_splits",
    "channel_contribution",
    "channel_count_sweep",
    "classification_metrics",
    "compute_targets",
    "evaluate",
    "finetune",
    "freeze",
    "init_classifier",
    "mae_output_dim",
    "read_metrics",
    "select_top_channels",
    "stream_generator",
    "stream_rng",
    "summarize_seeds",
    "target_indices",
    "train_mae",
    "train_vqvae",
    "vqvae_step",
    "write_contrib_csv",
]
