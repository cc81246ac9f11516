"""Entanglement in evanescently coupled chi(2) waveguides."""

__version__ = "1.0.0"
