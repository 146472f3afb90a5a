"""Functional-group-aware molecular representation pipeline."""

__version__ = "0.1.0"
