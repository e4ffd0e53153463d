"""
Runner Module

Executes one configured stage (or the whole pipeline, or a sweep of
either) inside an output directory it owns.

Every run writes ``resolved-config.json`` first, appends epoch metrics to
``metrics.jsonl`` and finishes with ``summary.json``. Stage artifacts:

    synth        raw.duin (+ sidecar)
    preprocess   clean.duin (+ sidecar)
    train-vqvae  checkpoints/vqvae, checkpoints/vqvae-best
    train-mae    checkpoints/mae, checkpoints/mae-best
    finetune     checkpoints/classifier (per seed when several)
    eval         summary.json test metrics
    contrib      contrib.csv
    gradcheck    gradcheck.json

Example:
    >>> cfg = parse_config("configs/desk.yaml")
    >>> result = run(cfg)
    >>> result.status
    0
"""

import itertools
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import torch

from ..config import RunConfig, config_from_dict, get_settings, resolved_dict
from ..model import DuinClassifier, DuinEncoder, DuinMAE, DuinVQVAE
from ..numeric import configure_threads, finite_diff_gradcheck, seed_everything
from ..preprocess import FilterSpec, run_pipeline
from ..signal_store import (
    PretrainDataset,
    Recording,
    SyntheticSpec,
    generate_synthetic,
    load_recording,
    save_recording,
    segment_pretrain,
    select_channels,
)
from ..training import (
    MetricsWriter,
    PrerequisiteError,
    TrialSplits,
    build_trial_splits,
    channel_contribution,
    channel_count_sweep,
    evaluate,
    finetune,
    init_classifier,
    mae_output_dim,
    summarize_seeds,
    train_mae,
    train_vqvae,
    write_contrib_csv,
)
from .checkpoint import Checkpoint, load_checkpoint, load_into

# Configure logging
logger = logging.getLogger(__name__)

PIPELINE_STAGES = ("synth", "preprocess", "train-vqvae", "train-mae", "finetune", "eval")


@dataclass
class RunResult:
    """Exit status, artifact paths and headline metrics of a run."""

    status: int
    out_dir: str
    artifacts: dict[str, str] = field(default_factory=dict)
    metrics: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status,
            "out_dir": self.out_dir,
            "artifacts": dict(self.artifacts),
            "metrics": self.metrics,
        }


def _write_json(path: Path, data: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
    return path


def _require(path: str | None, what: str) -> Path:
    if path is None:
        raise PrerequisiteError(f"Stage needs {what}, but no path was configured")
    resolved = Path(path)
    if not resolved.exists():
        raise PrerequisiteError(f"{what} not found at {resolved}")
    return resolved


def load_input(cfg: RunConfig) -> tuple[Recording, RunConfig]:
    """
    Load the configured recording, apply the channel subset and fit the
    encoder's channel count to it.
    """
    rec = load_recording(_require(cfg.paths.recording, "a recording (paths.recording)"))
    if cfg.data.channels is not None:
        rec = select_channels(rec, cfg.data.channels)
    if rec.n_channels != cfg.encoder.n_channels:
        logger.info(f"Encoder channel count set to {rec.n_channels} to match the recording")
        cfg = cfg.model_copy(
            update={"encoder": cfg.encoder.model_copy(update={"n_channels": rec.n_channels})}
        )
    return rec, cfg


def _pretrain_dataset(rec: Recording, cfg: RunConfig) -> PretrainDataset:
    segments = segment_pretrain(
        rec,
        cfg.data.segment_seconds,
        cfg.data.hop_seconds,
        exclude_trials=cfg.data.exclude_trials,
    )
    return PretrainDataset(rec, segments, cfg.data.sample_seconds, cfg.data.augment_pretrain)


def _load_vqvae(cfg: RunConfig, ckpt: Checkpoint) -> DuinVQVAE:
    model = DuinVQVAE.from_config(cfg)
    load_into(model, ckpt)
    return model


def _classifier_from_checkpoint(
    cfg: RunConfig, ckpt: Checkpoint, n_classes: int, n_patches: int
) -> DuinClassifier:
    with_quantizer = any(name.startswith("quantizer.") for name in ckpt.tensors)
    model = DuinClassifier.from_config(
        cfg.encoder,
        n_classes=n_classes,
        n_patches=n_patches,
        hidden=cfg.finetune.head_hidden,
        quantizer_cfg=cfg.quantizer if with_quantizer else None,
    )
    load_into(model, ckpt)
    return model


class StageRunner:
    """Runs stages of one configuration inside ``out_dir``."""

    def __init__(self, cfg: RunConfig, out_dir: Path, writer: MetricsWriter):
        self.cfg = cfg
        self.out_dir = out_dir
        self.writer = writer
        self.echo = resolved_dict(cfg)

    def run_stage(self, stage: str) -> RunResult:
        handler = {
            "synth": self.synth,
            "preprocess": self.preprocess,
            "train-vqvae": self.train_vqvae,
            "train-mae": self.train_mae,
            "finetune": self.finetune,
            "eval": self.eval,
            "contrib": self.contrib,
            "gradcheck": self.gradcheck,
            "pipeline": self.pipeline,
        }[stage]
        logger.info(f"Running stage {stage} in {self.out_dir}")
        seed_everything(self.cfg.seed)
        return handler()

    def _result(self, **artifacts: str) -> RunResult:
        return RunResult(status=0, out_dir=str(self.out_dir), artifacts=dict(artifacts))

    def synth(self) -> RunResult:
        spec = SyntheticSpec(seed=self.cfg.seed, **self.cfg.synthetic.model_dump())
        rec, trials = generate_synthetic(spec)
        path = self.out_dir / "raw.duin"
        save_recording(rec, path)
        result = self._result(recording=str(path))
        result.metrics = {"n_trials": len(trials), "duration_seconds": rec.duration_seconds}
        return result

    def preprocess(self) -> RunResult:
        rec = load_recording(_require(self.cfg.paths.recording, "a recording (paths.recording)"))
        pp = self.cfg.preprocess
        if pp.enabled:
            spec = FilterSpec(**pp.model_dump(exclude={"enabled"}))
            rec = run_pipeline(rec, spec)
        path = self.out_dir / "clean.duin"
        save_recording(rec, path)
        return self._result(recording=str(path))

    def train_vqvae(self) -> RunResult:
        rec, cfg = load_input(self.cfg)
        dataset = _pretrain_dataset(rec, cfg)
        model = DuinVQVAE.from_config(cfg)
        history = train_vqvae(
            model,
            dataset,
            cfg.vqvae,
            seed=cfg.seed,
            out_dir=self.out_dir / "checkpoints",
            writer=self.writer,
            config_echo=resolved_dict(cfg),
        )
        result = self._result(
            vqvae_checkpoint=history.checkpoints["final"],
            vqvae_best=history.checkpoints.get("best", ""),
        )
        curves = {key: history.curve(key) for key in ("recon_mse", "utilization", "perplexity")}
        result.metrics = {
            "final": history.epochs[-1],
            "best_epoch": history.best_epoch,
            "curves": curves,
        }
        return result

    def train_mae(self) -> RunResult:
        rec, cfg = load_input(self.cfg)
        vqvae = None
        if cfg.mae.target != "raw":
            ckpt = load_checkpoint(
                _require(cfg.paths.vqvae_checkpoint, "a VQ-VAE checkpoint (paths.vqvae_checkpoint)")
            )
            vqvae = _load_vqvae(cfg, ckpt)
        dataset = _pretrain_dataset(rec, cfg)
        seed_everything(cfg.seed)
        out_dim = mae_output_dim(
            cfg.mae.target,
            cfg.quantizer.n_codex,
            cfg.encoder.d_model,
            cfg.encoder.n_channels,
            cfg.encoder.window,
        )
        model = DuinMAE(cfg.encoder, target=cfg.mae.target, out_dim=out_dim)
        history = train_mae(
            model,
            dataset,
            cfg.mae,
            vqvae=vqvae,
            seed=cfg.seed,
            out_dir=self.out_dir / "checkpoints",
            writer=self.writer,
            config_echo=resolved_dict(cfg),
        )
        result = self._result(
            mae_checkpoint=history.checkpoints["final"],
            mae_best=history.checkpoints.get("best", ""),
        )
        keys = ("loss", "accuracy") if cfg.mae.target == "codex" else ("loss",)
        curves = {key: history.curve(key) for key in keys}
        result.metrics = {
            "final": history.epochs[-1],
            "best_epoch": history.best_epoch,
            "curves": curves,
        }
        return result

    def _checkpoints_for_mode(self, mode: str) -> tuple[Checkpoint | None, Checkpoint | None]:
        vqvae_ckpt = mae_ckpt = None
        if mode in ("vqvae", "vqvae_vq"):
            vqvae_ckpt = load_checkpoint(
                _require(self.cfg.paths.vqvae_checkpoint, "a VQ-VAE checkpoint")
            )
        if mode == "mae":
            mae_ckpt = load_checkpoint(_require(self.cfg.paths.mae_checkpoint, "an MAE checkpoint"))
        return vqvae_ckpt, mae_ckpt

    def finetune(self) -> RunResult:
        rec, cfg = load_input(self.cfg)
        splits = build_trial_splits(rec, cfg)
        mode = cfg.finetune.mode
        vqvae_ckpt, mae_ckpt = self._checkpoints_for_mode(mode)
        seeds = cfg.finetune.seeds or [cfg.seed]

        per_seed = []
        first_model: DuinClassifier | None = None
        checkpoint = ""
        for seed in seeds:
            seed_everything(seed)
            model = init_classifier(
                mode, cfg, splits.n_classes, splits.n_patches, vqvae_ckpt, mae_ckpt
            )
            ckpt_dir = self.out_dir / "checkpoints"
            if len(seeds) > 1:
                ckpt_dir = ckpt_dir / f"seed-{seed}"
            run = finetune(
                model,
                splits.train,
                splits.val,
                cfg.finetune,
                seed=seed,
                out_dir=ckpt_dir,
                writer=self.writer,
                config_echo=resolved_dict(cfg),
            )
            test = evaluate(model, splits.test)
            self.writer.write(
                epoch=run.best_epoch, split="test", seed=seed, top1=test.top1, ce=test.ce
            )
            per_seed.append(
                {"seed": seed, "top1": test.top1, "ce": test.ce, "val_top1": run.best_val_top1}
            )
            if first_model is None:
                first_model, checkpoint = model, run.checkpoint or ""
            logger.info(f"Seed {seed}: test top1={test.top1:.2%}, ce={test.ce:.4f}")

        result = self._result(classifier_checkpoint=checkpoint)
        result.metrics = {
            "mode": mode,
            "chance": 1.0 / splits.n_classes,
            "per_seed": per_seed,
            "summary": summarize_seeds([{k: r[k] for k in ("top1", "ce")} for r in per_seed]),
        }
        if cfg.finetune.channel_sweep and first_model is not None:
            scores = channel_contribution(
                first_model.projection_weights(), cfg.contrib.performance_weight
            )
            result.metrics["channel_sweep"] = channel_count_sweep(
                rec, cfg, scores, writer=self.writer
            )
        return result

    def _trained_classifier(self) -> tuple[DuinClassifier, Recording, TrialSplits]:
        rec, cfg = load_input(self.cfg)
        ckpt = load_checkpoint(
            _require(cfg.paths.classifier_checkpoint, "a classifier checkpoint")
        )
        splits = build_trial_splits(rec, cfg)
        model = _classifier_from_checkpoint(cfg, ckpt, splits.n_classes, splits.n_patches)
        return model, rec, splits

    def eval(self) -> RunResult:
        model, _, splits = self._trained_classifier()
        test = evaluate(model, splits.test)
        self.writer.write(epoch=0, split="test", top1=test.top1, ce=test.ce)
        result = self._result()
        result.metrics = {"test": test.to_dict(), "chance": 1.0 / splits.n_classes}
        return result

    def contrib(self) -> RunResult:
        model, rec, _ = self._trained_classifier()
        contrib = self.cfg.contrib
        scores = channel_contribution(model.projection_weights(), contrib.performance_weight)
        path = write_contrib_csv(self.out_dir / "contrib.csv", rec.channel_names, scores)
        k = min(contrib.top_k, rec.n_channels)
        result = self._result(contrib=str(path))
        top = scores.ranking()[:k]
        result.metrics = {
            "top_channels": top,
            "top_channel_names": [rec.channel_names[i] for i in top],
        }
        return result

    def gradcheck(self) -> RunResult:
        gc = self.cfg.gradcheck
        encoder = DuinEncoder(gc.encoder).double()
        encoder.train()
        gen = torch.Generator().manual_seed(self.cfg.seed)
        x = torch.randn(
            gc.batch_size,
            gc.encoder.n_channels,
            gc.n_patches * gc.encoder.window,
            generator=gen,
            dtype=torch.float64,
        )
        readout = torch.randn(
            gc.batch_size, gc.n_patches, gc.encoder.d_model, generator=gen, dtype=torch.float64
        )
        params = dict(encoder.named_parameters())
        report = finite_diff_gradcheck(
            lambda: (encoder(x) * readout).sum(),
            params,
            h=gc.h,
            tolerance=gc.tolerance,
            max_coordinates=gc.max_coordinates,
            seed=self.cfg.seed,
        )
        path = _write_json(self.out_dir / "gradcheck.json", report.to_dict())
        result = self._result(gradcheck=str(path))
        result.status = 0 if report.passed else 1
        result.metrics = {"passed": report.passed, "max_rel_error": report.max_rel_error}
        return result

    def pipeline(self) -> RunResult:
        """Run every stage of PIPELINE_STAGES in its own sub-directory, threading artifacts."""
        cfg = self.cfg
        artifacts: dict[str, str] = {}
        metrics: dict[str, Any] = {}
        for stage in PIPELINE_STAGES:
            stage_dir = self.out_dir / stage
            runner = StageRunner(cfg, stage_dir, self.writer)
            result = runner.run_stage(stage)
            if result.status != 0:
                result.out_dir = str(self.out_dir)
                return result
            artifacts.update({f"{stage}.{k}": v for k, v in result.artifacts.items()})
            metrics[stage] = result.metrics
            fields = type(cfg.paths).model_fields
            paths = cfg.paths.model_copy(
                update={k: v for k, v in result.artifacts.items() if k in fields}
            )
            cfg = cfg.model_copy(update={"paths": paths})
        return RunResult(status=0, out_dir=str(self.out_dir), artifacts=artifacts, metrics=metrics)


def sweep_points(sweep: dict[str, list[Any]]) -> list[dict[str, Any]]:
    """Cartesian product of sweep values, keys in sorted order."""
    keys = sorted(sweep)
    combos = itertools.product(*(sweep[k] for k in keys))
    return [dict(zip(keys, values, strict=True)) for values in combos]


def sweep_dir_name(point: dict[str, Any]) -> str:
    return ",".join(f"{k}={v}" for k, v in point.items())


def _run_single(cfg: RunConfig, out_dir: Path) -> RunResult:
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "resolved-config.json", resolved_dict(cfg))
    with MetricsWriter(out_dir / "metrics.jsonl") as writer:
        result = StageRunner(cfg, out_dir, writer).run_stage(cfg.stage)
    _write_json(out_dir / "summary.json", result.to_dict())
    return result


def run(cfg: RunConfig) -> RunResult:
    """
    Execute a configured run.

    With a non-empty ``sweep`` block, every point of the cartesian product
    runs in ``<out_dir>/sweep/<key>=<value>[,...]/`` with its own resolved
    config and metrics.

    Returns:
        RunResult; status is nonzero if any run failed its own check
        (gradcheck) and exceptions propagate to the caller.
    """
    configure_threads(get_settings().threads)
    out_dir = Path(cfg.paths.out_dir)

    if not cfg.sweep:
        return _run_single(cfg, out_dir)

    base = resolved_dict(cfg)
    base["sweep"] = {}
    results = []
    for point in sweep_points(cfg.sweep):
        point_dir = out_dir / "sweep" / sweep_dir_name(point)
        point_cfg = config_from_dict(base, {**point, "paths.out_dir": str(point_dir)})
        logger.info(f"Sweep point {sweep_dir_name(point)}")
        results.append(_run_single(point_cfg, point_dir))

    names = [sweep_dir_name(p) for p in sweep_points(cfg.sweep)]
    summary = RunResult(
        status=max(r.status for r in results),
        out_dir=str(out_dir),
        artifacts={name: r.out_dir for name, r in zip(names, results, strict=True)},
        metrics={name: r.metrics for name, r in zip(names, results, strict=True)},
    )
    _write_json(out_dir / "summary.json", summary.to_dict())
    return summary
