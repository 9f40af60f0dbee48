"""Fidelity benchmark for synthetic tabular data with a fitted Super-Metric."""

__version__ = "0.1.0"
