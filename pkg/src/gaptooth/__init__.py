"""Gap-tooth simulation of staggered wave systems."""

__version__ = "0.1.0"
