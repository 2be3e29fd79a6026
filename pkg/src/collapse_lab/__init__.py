"""Collapse-model, trace-dynamics and aikyon simulation toolkit."""

__version__ = "0.1.0"
