"""Emotion- and dream-conditioned poetry generation at desk scale."""

__version__ = "0.1.0"
