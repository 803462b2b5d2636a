"""Semantic vs. background distribution shift: simulation, detectors and metrics."""

__version__ = "0.1.0"
