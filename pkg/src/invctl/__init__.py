"""Inverse control of physics-based sound synthesizers with an LSTM."""

__version__ = "0.1.0"
