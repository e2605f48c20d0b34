"""Monolingual data selection for simultaneous MT: chunk, monotonicity and
difficulty metrics, two-stage sampling, and wait-k diagnostics."""

__version__ = "0.1.0"
