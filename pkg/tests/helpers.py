"""Shared builders for the test suite."""

import numpy as np

from duin.config import RunConfig, config_from_dict
from duin.signal_store import (
    ChannelMeta,
    Recording,
    SyntheticSpec,
    TrialAnnotation,
    generate_synthetic,
)


def make_channels(n_channels: int, per_electrode: int = 4) -> list[ChannelMeta]:
    channels = []
    for row in range(n_channels):
        electrode, contact = divmod(row, per_electrode)
        electrode_id = "ABCDEFGH"[electrode]
        channels.append(ChannelMeta(f"{electrode_id}{contact + 1}", electrode_id, contact))
    return channels


def make_recording(
    n_channels: int = 4,
    n_samples: int = 1000,
    sample_rate_hz: float = 100.0,
    trials: list[TrialAnnotation] | None = None,
    n_labels: int = 0,
    seed: int = 0,
    per_electrode: int = 4,
) -> Recording:
    rng = np.random.default_rng(seed)
    return Recording(
        subject_id="test-subject",
        sample_rate_hz=sample_rate_hz,
        channels=make_channels(n_channels, per_electrode),
        data=rng.standard_normal((n_channels, n_samples)).astype(np.float32),
        trials=list(trials or []),
        label_names=[f"word_{k}" for k in range(n_labels)],
    )


TINY_MODEL = {
    "encoder": {
        "n_channels": 3,
        "window": 10,
        "proj_channels": 4,
        "conv_channels": [8, 8, 8],
        "conv_kernels": [19, 3, 3],
        "conv_strides": [10, 1, 1],
        "conv_paddings": [9, 1, 1],
        "d_model": 8,
        "n_layers": 2,
        "n_heads": 2,
        "head_dim": 4,
        "ffn_dim": 16,
        "attn_dropout": 0.0,
        "mlp_dropout": [0.0, 0.0],
        "t_max": 40,
    },
    "quantizer": {"n_codex": 16, "d_codex": 4},
    "regressor": {
        "n_layers": 1,
        "n_heads": 2,
        "head_dim": 4,
        "ffn_dim": 16,
        "head_channels": [8, 8, 4],
        "head_kernels": [3, 3, 10],
        "head_strides": [1, 1, 10],
        "head_paddings": [1, 1, 0],
        "head_output_paddings": [0, 0, 0],
    },
}


def tiny_config(stage: str = "train-vqvae", overrides: dict | None = None) -> RunConfig:
    """A RunConfig with the tiny 3-channel model; ``overrides`` use dotted keys."""
    return config_from_dict({"stage": stage, **TINY_MODEL}, overrides)


def synthetic_recording(n_channels: int = 3, n_trials_per_class: int = 6, seed: int = 0) -> Recording:
    """A 100 Hz two-class synthetic recording sized for the tiny model."""
    rec, _ = generate_synthetic(
        SyntheticSpec(
            n_channels=n_channels,
            sample_rate_hz=100.0,
            n_classes=2,
            n_trials_per_class=n_trials_per_class,
            informative_channels=[0, n_channels - 1],
            contacts_per_electrode=n_channels,
            seed=seed,
        )
    )
    return rec


def short_training(epochs: int = 2) -> dict:
    """Dotted overrides for stage loops that finish in a few steps."""
    overrides: dict = {}
    for block in ("vqvae", "mae", "finetune"):
        overrides[f"{block}.epochs"] = epochs
        overrides[f"{block}.warmup_epochs"] = 1
        overrides[f"{block}.batch_size"] = 16
    overrides["finetune.head_hidden"] = 8
    return overrides


PIPELINE_SYNTHETIC = {
    "synthetic.n_channels": 3,
    "synthetic.sample_rate_hz": 400.0,
    "synthetic.n_classes": 2,
    "synthetic.n_trials_per_class": 6,
    "synthetic.informative_channels": [0, 2],
    "synthetic.contacts_per_electrode": 3,
    "preprocess.high_hz": 60.0,
    "preprocess.target_rate_hz": 100.0,
    "preprocess.bipolar": False,
}
