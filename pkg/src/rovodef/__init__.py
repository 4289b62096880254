"""Deflection of a thermal diatomic beam by a far-detuned standing-wave laser."""

__version__ = "0.1.0"
