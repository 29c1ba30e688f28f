"""Peak-temperature regression, deposition-quality classification and
physics-informed neural models for additive friction stir deposition."""

__version__ = "0.1.0"
