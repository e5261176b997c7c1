"""Quantum reservoir computing on small spin systems with Krylov-space measures."""

__version__ = "0.1.0"
