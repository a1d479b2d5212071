"""Exterior calculus, 2-plectic brackets, Lie 2-algebras of observables and
a worldsheet string simulator."""

__version__ = "0.1.0"
