"""Deterministic pick-and-place teleoperation sim and dataset toolkit."""

__version__ = "0.1.0"
