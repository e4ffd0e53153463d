"""
Pytest configuration file for test suite.

This file is automatically loaded by pytest and configures test behavior.
"""

import os

import pytest

from duin.numeric import configure_threads


def pytest_configure(config):
    """
    Pin the run settings before any test imports them.

    Tests run single-threaded so seeded training is bitwise reproducible.
    """
    os.environ.setdefault("DUIN_THREADS", "1")
    os.environ.setdefault("DUIN_LOG_LEVEL", "WARNING")


@pytest.fixture(autouse=True)
def deterministic_torch():
    """Single-threaded deterministic torch for every test."""
    configure_threads(1)
    yield
