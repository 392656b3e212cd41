"""Flexible control-flow alignment and model-based repair for small programs."""

__version__ = "0.1.0"
