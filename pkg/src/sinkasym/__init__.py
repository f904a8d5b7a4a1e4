"""Asymptotic iterates and trajectory relations for polynomial ODEs near a sink."""

__version__ = "0.1.0"
