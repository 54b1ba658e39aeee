"""Numerical construction of invariant translating solitons via their profile ODE."""

__version__ = "0.1.0"
