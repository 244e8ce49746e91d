"""Quantum vacuum fluctuations acting on a moving partially transmitting mirror."""

__version__ = "0.1.0"
