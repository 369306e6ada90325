"""Spectral OOD-detection laboratory on synthetic augmentation graphs."""

__version__ = "0.1.0"
