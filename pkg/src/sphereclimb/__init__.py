"""Simulation of four tethered spherical robots climbing a slope by hopping."""

__version__ = "0.1.0"
