"""Tests for the duin package."""
