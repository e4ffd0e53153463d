"""
Config Module

Run configuration schema, file loading and environment settings.
"""

from .loader import (
    ConfigError,
    config_from_dict,
    load_config_data,
    parse_config,
    resolved_dict,
    set_dotted,
)
from .schema import (
    ContribConfig,
    DataConfig,
    EncoderConfig,
    FinetuneConfig,
    GradcheckConfig,
    MaeTrainConfig,
    PathsConfig,
    PreprocessConfig,
    QuantizerConfig,
    RegressorConfig,
    RunConfig,
    SyntheticConfig,
    VqvaeTrainConfig,
)
from .settings import DuinSettings, get_settings

__all__ = [
    "ConfigError",
    "ContribConfig",
    "DataConfig",
    "DuinSettings",
    "EncoderConfig",
    "FinetuneConfig",
    "GradcheckConfig",
    "MaeTrainConfig",
    "PathsConfig",
    "PreprocessConfig",
    "QuantizerConfig",
    "RegressorConfig",
    "RunConfig",
    "SyntheticConfig",
    "VqvaeTrainConfig",
    "config_from_dict",
    "get_settings",
    "load_config_data",
    "parse_config",
    "resolved_dict",
    "set_dotted",
]
