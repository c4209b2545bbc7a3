"""Simulation lab for stationary light pulses in a cold Lambda-type atomic ensemble."""

__version__ = "0.1.0"
