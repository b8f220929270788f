"""WAIT: transparency-backed integrity for single-page web applications."""

__version__ = "0.1.0"
