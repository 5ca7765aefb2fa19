"""Simulation of tunneling modes synchronized by a thermal bath."""

__version__ = "1.0.0"
