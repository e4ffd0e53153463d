"""
Checkpoint Module

Saves and loads model state as a self-describing directory::

    header.json   stage, config echo, epoch, metrics, format_version
    tensors.idx   JSON list of {name, dtype, dims, byte_offset, byte_len}
    tensors.bin   raw little-endian payload, tensors back to back

Example:
    >>> save_checkpoint(model, "runs/a/vqvae", stage="vqvae", config=cfg_dict, epoch=399)
    >>> ckpt = load_checkpoint("runs/a/vqvae")
    >>> report = load_into(mae.encoder, ckpt, prefix="encoder.")
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import torch
from torch import nn

# Configure logging
logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
HEADER_FILE = "header.json"
INDEX_FILE = "tensors.idx"
PAYLOAD_FILE = "tensors.bin"

DTYPES: dict[str, tuple[torch.dtype, str]] = {
    "f32": (torch.float32, "<f4"),
    "f64": (torch.float64, "<f8"),
    "i64": (torch.int64, "<i8"),
    "i32": (torch.int32, "<i4"),
    "bool": (torch.bool, "|b1"),
}
_TORCH_TO_CODE = {torch_dtype: code for code, (torch_dtype, _) in DTYPES.items()}


class CheckpointError(Exception):
    """Raised when a checkpoint cannot be written, read or applied."""

    pass


@dataclass
class Checkpoint:
    """A loaded checkpoint: header fields plus named tensors."""

    stage: str
    config: dict[str, Any]
    epoch: int
    metrics: dict[str, Any]
    tensors: dict[str, torch.Tensor]
    format_version: int = FORMAT_VERSION


@dataclass
class LoadReport:
    """
    Outcome of :func:`load_into`.

    Attributes:
        loaded: Model names filled from the checkpoint.
        unmatched: Checkpoint names under the prefix with no model counterpart.
        missing: Model names the checkpoint did not provide.
    """

    loaded: list[str] = field(default_factory=list)
    unmatched: list[str] = field(default_factory=list)
    missing: list[str] = field(default_factory=list)


def _state(source: nn.Module | dict[str, torch.Tensor]) -> dict[str, torch.Tensor]:
    return source.state_dict() if isinstance(source, nn.Module) else dict(source)


def save_checkpoint(
    source: nn.Module | dict[str, torch.Tensor],
    path: str | Path,
    stage: str,
    config: dict[str, Any] | None = None,
    epoch: int = 0,
    metrics: dict[str, Any] | None = None,
) -> Path:
    """
    Write a checkpoint directory.

    Args:
        source: Module (its state_dict is saved) or a name -> tensor mapping.
        path: Checkpoint directory, created if needed.
        stage: Stage that produced the checkpoint ("vqvae", "mae", "classifier").
        config: Resolved run configuration to echo.
        epoch: Epoch of the snapshot.
        metrics: Metric snapshot.

    Returns:
        The checkpoint directory.

    Raises:
        CheckpointError: On unsupported dtypes or write failures.
    """
    directory = Path(path)
    index = []
    chunks = []
    offset = 0
    for name, tensor in _state(source).items():
        code = _TORCH_TO_CODE.get(tensor.dtype)
        if code is None:
            raise CheckpointError(f"Unsupported dtype {tensor.dtype} for tensor {name!r}")
        raw = tensor.detach().cpu().contiguous().numpy().astype(DTYPES[code][1], copy=False).tobytes()
        index.append(
            {
                "name": name,
                "dtype": code,
                "dims": list(tensor.shape),
                "byte_offset": offset,
                "byte_len": len(raw),
            }
        )
        chunks.append(raw)
        offset += len(raw)

    header = {
        "stage": stage,
        "config": config or {},
        "epoch": epoch,
        "metrics": metrics or {},
        "format_version": FORMAT_VERSION,
    }

    try:
        directory.mkdir(parents=True, exist_ok=True)
        with (directory / PAYLOAD_FILE).open("wb") as f:
            for raw in chunks:
                f.write(raw)
        with (directory / INDEX_FILE).open("w", encoding="utf-8") as f:
            json.dump(index, f, indent=2)
        with (directory / HEADER_FILE).open("w", encoding="utf-8") as f:
            json.dump(header, f, indent=2, sort_keys=True)
    except OSError as e:
        error_msg = f"Failed to save checkpoint: {e}"
        logger.error(error_msg)
        raise CheckpointError(error_msg) from e

    logger.info(f"Checkpoint saved to: {directory} ({len(index)} tensors, {offset} bytes)")
    return directory


def load_checkpoint(path: str | Path) -> Checkpoint:
    """
    Read a checkpoint directory.

    Raises:
        CheckpointError: On missing files, version mismatch, duplicate names or
            index entries outside the payload.
    """
    directory = Path(path)
    try:
        with (directory / HEADER_FILE).open(encoding="utf-8") as f:
            header = json.load(f)
        with (directory / INDEX_FILE).open(encoding="utf-8") as f:
            index = json.load(f)
        payload = (directory / PAYLOAD_FILE).read_bytes()
    except OSError as e:
        error_msg = f"Failed to load checkpoint from {directory}: {e}"
        logger.error(error_msg)
        raise CheckpointError(error_msg) from e
    except json.JSONDecodeError as e:
        error_msg = f"Malformed checkpoint metadata in {directory}: {e}"
        logger.error(error_msg)
        raise CheckpointError(error_msg) from e

    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"Checkpoint format version {version} in {directory}, expected {FORMAT_VERSION}"
        )

    tensors: dict[str, torch.Tensor] = {}
    for entry in index:
        name = entry["name"]
        if name in tensors:
            raise CheckpointError(f"Duplicate tensor name {name!r} in {directory}")
        if entry["dtype"] not in DTYPES:
            raise CheckpointError(f"Unknown dtype {entry['dtype']!r} for tensor {name!r}")
        torch_dtype, np_dtype = DTYPES[entry["dtype"]]
        start, length = entry["byte_offset"], entry["byte_len"]
        if start < 0 or start + length > len(payload):
            raise CheckpointError(
                f"Tensor {name!r} spans bytes [{start}, {start + length}) beyond payload "
                f"of {len(payload)} bytes"
            )
        dims = tuple(entry["dims"])
        count = int(np.prod(dims)) if dims else 1
        if count * np.dtype(np_dtype).itemsize != length:
            raise CheckpointError(f"Tensor {name!r} byte length disagrees with dims {dims}")
        array = np.frombuffer(payload, dtype=np_dtype, count=count, offset=start).reshape(dims)
        tensors[name] = torch.from_numpy(array.copy()).to(torch_dtype)

    logger.info(f"Checkpoint loaded from: {directory} (stage={header.get('stage')})")
    return Checkpoint(
        stage=header.get("stage", ""),
        config=header.get("config", {}),
        epoch=int(header.get("epoch", 0)),
        metrics=header.get("metrics", {}),
        tensors=tensors,
        format_version=version,
    )


def load_into(module: nn.Module, ckpt: Checkpoint, prefix: str = "") -> LoadReport:
    """
    Copy checkpoint tensors named ``prefix + <model name>`` into ``module``.

    Args:
        module: Target module.
        ckpt: Loaded checkpoint.
        prefix: Name prefix selecting a sub-model in the checkpoint (e.g. "encoder.").

    Returns:
        LoadReport listing loaded, unmatched and missing names.

    Raises:
        CheckpointError: If a matched tensor has a different shape.
    """
    state = module.state_dict()
    report = LoadReport()
    selected = {
        name[len(prefix) :]: tensor for name, tensor in ckpt.tensors.items() if name.startswith(prefix)
    }
    with torch.no_grad():
        for name, tensor in selected.items():
            if name not in state:
                report.unmatched.append(prefix + name)
                continue
            target = state[name]
            if target.shape != tensor.shape:
                raise CheckpointError(
                    f"Shape mismatch for {prefix + name}: checkpoint {tuple(tensor.shape)} "
                    f"vs model {tuple(target.shape)}"
                )
            target.copy_(tensor.to(target.dtype))
            report.loaded.append(name)
    report.missing = [name for name in state if name not in selected]

    if report.unmatched:
        logger.info(f"{len(report.unmatched)} checkpoint tensors unmatched: {report.unmatched[:5]}")
    if report.missing:
        logger.warning(f"{len(report.missing)} model tensors not in checkpoint: {report.missing[:5]}")
    return report
