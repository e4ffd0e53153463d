"""Pydantic models for run configuration.

This module defines the schema of a run: one block per pipeline stage, with
defaults at full model scale (d=160, 8 layers, codex 2048x64) and
cross-field validators that check the encoder and regressor geometry before
any model is built.

Every block forbids unknown keys, so a typo such as ``lr_max`` fails
validation instead of being silently ignored.
"""

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..numeric import conv1d_out_len, conv1d_transpose_out_len

Stage = Literal[
    "synth",
    "preprocess",
    "train-vqvae",
    "train-mae",
    "finetune",
    "eval",
    "contrib",
    "gradcheck",
    "pipeline",
]
InitMode = Literal["random", "vqvae", "vqvae_vq", "mae"]
MaeTarget = Literal["codex", "embedding", "raw"]
Activation = Literal["relu", "gelu", "tanh"]


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SyntheticConfig(_Block):
    """Synthetic corpus parameters.

    Example:
        >>> SyntheticConfig(n_channels=10, informative_channels=[2, 5]).n_classes
        8
    """

    n_channels: int = Field(default=10, ge=1)
    sample_rate_hz: float = Field(default=1000.0, gt=0)
    n_classes: int = Field(default=8, ge=2)
    n_trials_per_class: int = Field(default=20, ge=1)
    informative_channels: list[int] = Field(default_factory=lambda: [2, 5])
    noise_sigma: float = Field(default=1.0, ge=0)
    background_exponent: float = Field(default=0.0, ge=0)
    shared_background: float = Field(default=0.0, ge=0, le=1)
    trial_seconds: float = Field(default=3.0, gt=0)
    gap_seconds: float = Field(default=0.5, ge=0.5)
    filler_ratio: float = Field(default=4.0, ge=4.0)
    signal_amplitude: float = Field(default=1.0, ge=0)
    contacts_per_electrode: int = Field(default=10, ge=1)
    subject_id: str = "synthetic-01"


class PreprocessConfig(_Block):
    """Signal conditioning parameters."""

    enabled: bool = True
    low_hz: float = Field(default=0.5, gt=0)
    high_hz: float = Field(default=200.0, gt=0)
    notch_hz: float = Field(default=50.0, gt=0)
    notch_q: float = Field(default=35.0, gt=0)
    target_rate_hz: float = Field(default=1000.0, gt=0)
    order: int = Field(default=4, ge=1)
    bipolar: bool = True

    @model_validator(mode="after")
    def check_band(self) -> "PreprocessConfig":
        if not self.low_hz < self.notch_hz < self.high_hz:
            raise ValueError("notch_hz must lie inside (low_hz, high_hz)")
        return self


class DataConfig(_Block):
    """Segmentation, augmentation and split parameters."""

    segment_seconds: float = Field(default=8.0, gt=0)
    hop_seconds: float = Field(default=4.0, gt=0)
    sample_seconds: float = Field(default=4.0, gt=0)
    trial_seconds: float = Field(default=3.0, gt=0)
    max_shift_seconds: float = Field(default=0.3, ge=0)
    split_fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    split_seed: int = 0
    channels: list[int] | None = None
    exclude_trials: bool = False
    augment_pretrain: bool = True
    augment_trials: bool = True

    @field_validator("split_fractions")
    @classmethod
    def check_fractions(cls, v: tuple[float, float, float]) -> tuple[float, float, float]:
        if any(f <= 0 for f in v) or abs(sum(v) - 1.0) > 1e-6:
            raise ValueError("split fractions must be positive and sum to 1")
        return v

    @model_validator(mode="after")
    def check_windows(self) -> "DataConfig":
        if self.sample_seconds > self.segment_seconds:
            raise ValueError("sample_seconds cannot exceed segment_seconds")
        return self


class EncoderConfig(_Block):
    """Encoder geometry.

    The conv stack maps a W-sample patch to ``conv_channels[-1]`` channels
    of reduced length L'; their flattened product must equal ``d_model``.
    """

    n_channels: int = Field(default=10, ge=1)
    window: int = Field(default=100, ge=1)
    proj_channels: int = Field(default=16, ge=1)
    conv_channels: list[int] = Field(default_factory=lambda: [128, 128, 16])
    conv_kernels: list[int] = Field(default_factory=lambda: [19, 3, 3])
    conv_strides: list[int] = Field(default_factory=lambda: [10, 1, 1])
    conv_paddings: list[int] = Field(default_factory=lambda: [9, 1, 1])
    conv_activation: Activation = "gelu"
    d_model: int = Field(default=160, ge=1)
    n_layers: int = Field(default=8, ge=1)
    n_heads: int = Field(default=8, ge=1)
    head_dim: int = Field(default=64, ge=1)
    ffn_dim: int = Field(default=320, ge=1)
    attn_dropout: float = Field(default=0.2, ge=0, lt=1)
    mlp_dropout: tuple[float, float] = (0.2, 0.0)
    t_max: int = Field(default=40, ge=1)
    init_std: float = Field(default=0.02, gt=0)

    @field_validator("mlp_dropout")
    @classmethod
    def check_dropout(cls, v: tuple[float, float]) -> tuple[float, float]:
        if any(not 0 <= r < 1 for r in v):
            raise ValueError("dropout rates must lie in [0, 1)")
        return v

    def reduced_length(self) -> int:
        """Patch length after the conv stack."""
        length = self.window
        for k, s, p in zip(self.conv_kernels, self.conv_strides, self.conv_paddings, strict=True):
            length = conv1d_out_len(length, k, s, p)
        return length

    @model_validator(mode="after")
    def check_geometry(self) -> "EncoderConfig":
        sizes = {
            len(self.conv_channels),
            len(self.conv_kernels),
            len(self.conv_strides),
            len(self.conv_paddings),
        }
        if len(sizes) != 1:
            raise ValueError("conv_channels, conv_kernels, conv_strides, conv_paddings differ in length")
        length = self.reduced_length()
        if length < 1:
            raise ValueError(f"conv stack reduces window {self.window} to {length} samples")
        if self.conv_channels[-1] * length != self.d_model:
            raise ValueError(
                f"flattened conv output {self.conv_channels[-1]}x{length} != d_model {self.d_model}"
            )
        return self


class QuantizerConfig(_Block):
    """Codex size, commitment weight and EMA parameters."""

    n_codex: int = Field(default=2048, ge=1)
    d_codex: int = Field(default=64, ge=1)
    beta: float = Field(default=0.25, ge=0)
    decay: float = Field(default=0.99, ge=0, le=1)
    eps: float = Field(default=1e-5, gt=0)
    dead_code_epochs: int = Field(default=2, ge=0)


class RegressorConfig(_Block):
    """Decoder transformer and transposed-conv time regression head."""

    n_layers: int = Field(default=4, ge=1)
    n_heads: int = Field(default=8, ge=1)
    head_dim: int = Field(default=64, ge=1)
    ffn_dim: int = Field(default=320, ge=1)
    add_temporal: bool = True
    head_channels: list[int] = Field(default_factory=lambda: [128, 128, 128, 128, 16])
    head_kernels: list[int] = Field(default_factory=lambda: [3, 3, 10, 9, 19])
    head_strides: list[int] = Field(default_factory=lambda: [1, 1, 10, 1, 10])
    head_paddings: list[int] = Field(default_factory=lambda: [1, 1, 0, 4, 9])
    head_output_paddings: list[int] = Field(default_factory=lambda: [0, 0, 0, 0, 9])
    head_activation: Activation = "gelu"

    def output_length(self, n_patches: int) -> int:
        length = n_patches
        for k, s, p, op in zip(
            self.head_kernels,
            self.head_strides,
            self.head_paddings,
            self.head_output_paddings,
            strict=True,
        ):
            length = conv1d_transpose_out_len(length, k, s, p, op)
        return length

    @model_validator(mode="after")
    def check_layers(self) -> "RegressorConfig":
        sizes = {
            len(self.head_channels),
            len(self.head_kernels),
            len(self.head_strides),
            len(self.head_paddings),
            len(self.head_output_paddings),
        }
        if len(sizes) != 1:
            raise ValueError("regressor head layer lists differ in length")
        if any(op >= s for op, s in zip(self.head_output_paddings, self.head_strides, strict=True)):
            raise ValueError("each head output padding must be smaller than its stride")
        return self


class _TrainBlock(_Block):
    batch_size: int = Field(default=64, ge=1)
    max_lr: float = Field(default=3e-4, gt=0)
    min_lr: float = Field(default=5e-5, ge=0)
    weight_decay: float = Field(default=0.01, ge=0)
    epochs: int = Field(default=400, ge=1)
    warmup_epochs: int = Field(default=40, ge=0)

    @model_validator(mode="after")
    def check_schedule(self) -> Any:
        if self.min_lr > self.max_lr:
            raise ValueError("min_lr cannot exceed max_lr")
        if self.warmup_epochs >= self.epochs:
            raise ValueError("warmup_epochs must be smaller than epochs")
        return self


class VqvaeTrainConfig(_TrainBlock):
    """Stage-1 optimization parameters."""


class MaeTrainConfig(_TrainBlock):
    """Stage-2 optimization and masking parameters."""

    weight_decay: float = Field(default=0.05, ge=0)
    mask_ratio: float = Field(default=0.5, gt=0, lt=1)
    symmetric: bool = True
    target: MaeTarget = "codex"


class FinetuneConfig(_TrainBlock):
    """Classification fine-tuning parameters."""

    mode: InitMode = "random"
    batch_size: int = Field(default=32, ge=1)
    max_lr: float = Field(default=2e-4, gt=0)
    min_lr: float = Field(default=5e-6, ge=0)
    weight_decay: float = Field(default=0.05, ge=0)
    epochs: int = Field(default=200, ge=1)
    warmup_epochs: int = Field(default=20, ge=0)
    head_hidden: int = Field(default=128, ge=1)
    seeds: list[int] = Field(default_factory=list)
    channel_counts: list[int] = Field(default_factory=lambda: [5, 10, 15, 20, 30, 60])
    channel_sweep: bool = False


class ContribConfig(_Block):
    """Channel contribution analysis parameters."""

    performance_weight: float = Field(default=1.0, ge=0)
    top_k: int = Field(default=10, ge=1)


def _tiny_encoder() -> EncoderConfig:
    return EncoderConfig(
        n_channels=3,
        window=10,
        proj_channels=4,
        conv_channels=[8, 8, 8],
        d_model=8,
        n_layers=2,
        n_heads=2,
        head_dim=4,
        ffn_dim=16,
        attn_dropout=0.0,
        mlp_dropout=(0.0, 0.0),
        t_max=8,
    )


class GradcheckConfig(_Block):
    """Finite-difference check of a tiny encoder in float64."""

    encoder: EncoderConfig = Field(default_factory=_tiny_encoder)
    n_patches: int = Field(default=3, ge=1)
    batch_size: int = Field(default=2, ge=2)
    h: float = Field(default=1e-4, gt=0)
    tolerance: float = Field(default=1e-4, gt=0)
    max_coordinates: int = Field(default=512, ge=1)


class PathsConfig(_Block):
    """Inputs and artifacts consumed by individual stages."""

    recording: str | None = None
    vqvae_checkpoint: str | None = None
    mae_checkpoint: str | None = None
    classifier_checkpoint: str | None = None
    out_dir: str = "runs/default"


class RunConfig(_Block):
    """A complete run: stage, seed and every module block.

    Example:
        >>> cfg = RunConfig(stage="train-vqvae")
        >>> cfg.encoder.d_model, cfg.quantizer.n_codex
        (160, 2048)
    """

    stage: Stage
    seed: int = 0
    synthetic: SyntheticConfig = Field(default_factory=SyntheticConfig)
    preprocess: PreprocessConfig = Field(default_factory=PreprocessConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    encoder: EncoderConfig = Field(default_factory=EncoderConfig)
    quantizer: QuantizerConfig = Field(default_factory=QuantizerConfig)
    regressor: RegressorConfig = Field(default_factory=RegressorConfig)
    vqvae: VqvaeTrainConfig = Field(default_factory=VqvaeTrainConfig)
    mae: MaeTrainConfig = Field(default_factory=MaeTrainConfig)
    finetune: FinetuneConfig = Field(default_factory=FinetuneConfig)
    contrib: ContribConfig = Field(default_factory=ContribConfig)
    gradcheck: GradcheckConfig = Field(default_factory=GradcheckConfig)
    paths: PathsConfig = Field(default_factory=PathsConfig)
    sweep: dict[str, list[Any]] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_cross_fields(self) -> "RunConfig":
        for n_patches in (1, 2):
            length = self.regressor.output_length(n_patches)
            if length != self.encoder.window * n_patches:
                raise ValueError(
                    f"regressor head maps {n_patches} patches to {length} samples, "
                    f"expected {self.encoder.window * n_patches}"
                )
        return self
