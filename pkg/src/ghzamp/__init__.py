"""Device-independent randomness amplification with the GHZ game."""

__version__ = "0.1.0"
