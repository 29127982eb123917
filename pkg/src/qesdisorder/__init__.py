"""Numerics for quasi-exactly solvable sextic oscillators and their coupled pairs."""

__version__ = "0.1.0"
