"""Truncated ground-state preparation improved by eigenvector continuation."""

__version__ = "0.1.0"
