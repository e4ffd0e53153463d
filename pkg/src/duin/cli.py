#!/usr/bin/env python
"""
Command Line Interface

Runs one stage of the pipeline from a YAML configuration.

Usage:
    duin <stage> --config PATH [--out DIR] [--seed N] [--set key=value ...]

Stages: synth, preprocess, train-vqvae, train-mae, finetune, eval,
contrib, gradcheck, pipeline.

Exit codes:
    0  success
    1  runtime failure (missing prerequisite, divergence, failed gradcheck)
    2  invalid configuration

Example:
    $ duin gradcheck --config configs/desk.yaml --out runs/gc
"""

import argparse
import logging
import sys
from typing import Any, get_args

import yaml

try:
    from colorama import Fore, Style, init

    colorama_init = init  # type: ignore
except ImportError:
    # Fallback if colorama not available
    class _DummyColor:
        def __getattr__(self, name):
            return ""

    Fore = Style = _DummyColor()  # type: ignore[assignment]

    def colorama_init(**_kwargs) -> None:  # type: ignore[misc]
        pass


from .config import ConfigError, get_settings, parse_config
from .config.schema import Stage

# Configure logging
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _ok(text: str) -> str:
    return f"{Fore.GREEN}{Style.BRIGHT}{text}{Style.RESET_ALL}"


def _fail(text: str) -> str:
    return f"{Fore.RED}{Style.BRIGHT}{text}{Style.RESET_ALL}"


def parse_override(item: str) -> tuple[str, Any]:
    """Split ``key=value``; the value is read as YAML so numbers and lists keep their type."""
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise ConfigError(f"Override must look like key=value, got {item!r}")
    try:
        return key.strip(), yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise ConfigError(f"Invalid override value for {key}: {e}") from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="duin",
        description="Self-supervised sEEG encoder: pre-training, fine-tuning and analysis",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s synth --config configs/desk.yaml --out runs/raw
  %(prog)s pipeline --config configs/desk.yaml --out runs/desk
  %(prog)s finetune --config configs/desk.yaml --set finetune.mode=mae
        """,
    )
    parser.add_argument("stage", choices=get_args(Stage), help="Stage to run")
    parser.add_argument("--config", required=True, help="YAML run configuration")
    parser.add_argument("--out", help="Output directory (overrides paths.out_dir)")
    parser.add_argument("--seed", type=int, help="Run seed (overrides seed)")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Dotted config override, repeatable",
    )
    parser.add_argument("--verbose", action="store_true", help="Enable debug logging")
    return parser


def main(args: list[str] | None = None) -> int:
    """
    Main entry point.

    Args:
        args: Command-line arguments (for testing).

    Returns:
        Exit code.
    """
    parsed = build_parser().parse_args(args)
    colorama_init(autoreset=True)

    log_level = logging.DEBUG if parsed.verbose else get_settings().log_level
    logging.basicConfig(
        level=log_level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        overrides: dict[str, Any] = dict(parse_override(item) for item in parsed.set)
        overrides["stage"] = parsed.stage
        if parsed.out is not None:
            overrides["paths.out_dir"] = parsed.out
        if parsed.seed is not None:
            overrides["seed"] = parsed.seed
        cfg = parse_config(parsed.config, overrides)
    except ConfigError as e:
        print(_fail(f"✗ Invalid configuration: {e}"), file=sys.stderr)
        return EXIT_CONFIG

    # Imported here so --help and config errors stay fast
    from .runtime.runner import run

    try:
        result = run(cfg)
    except KeyboardInterrupt:
        print(_fail("\nInterrupted"), file=sys.stderr)
        return EXIT_FAILURE
    except Exception as e:
        logger.exception(f"Stage {cfg.stage} failed")
        print(_fail(f"✗ {cfg.stage} failed: {e}"), file=sys.stderr)
        return EXIT_FAILURE

    if result.status != EXIT_OK:
        print(_fail(f"✗ {cfg.stage} finished with status {result.status}"), file=sys.stderr)
        return EXIT_FAILURE
    print(_ok(f"✓ {cfg.stage} complete: {result.out_dir}"))
    return EXIT_OK


def run() -> None:
    """Console script entry point."""
    sys.exit(main())


if __name__ == "__main__":
    run()
