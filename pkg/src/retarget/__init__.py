"""Counting checks for orbit-level tendencies of parametric decision-makers."""

__version__ = "0.1.0"
