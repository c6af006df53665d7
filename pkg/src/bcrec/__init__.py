"""Trust-aware neighborhood rating prediction with Bhattacharyya-weighted user similarity."""

__version__ = "0.1.0"
