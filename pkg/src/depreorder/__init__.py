"""Dependency-based neural reordering for phrase-based translation."""

__version__ = "0.1.0"
