"""Paired patch-translation trainer for dual-frequency ultrasound data."""

__version__ = "0.1.0"
