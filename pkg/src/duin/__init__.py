"""
duin: self-supervised encoder for intracranial sEEG word decoding.

Subpackages:
    signal_store: Recordings, segmentation, synthetic data and splits.
    preprocess: Band-pass, notch, resampling, referencing and z-scoring.
    numeric: Tensor kernels, optimizer schedule, seeding and gradient checks.
    model: Encoder, quantizer, regressor and the three task heads.
    training: VQ-VAE, masked-modeling and classification loops.
    runtime: Checkpoints and the stage runner.
    config: Validated run configuration.
"""

__version__ = "0.1.0"
