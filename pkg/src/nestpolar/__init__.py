"""Nested rate-compatible symmetric polar codes."""
__version__ = "0.1.0"
