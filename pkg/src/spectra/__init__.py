"""Numerical workbench for discrete Schrodinger operators on graphs."""

__version__ = "0.1.0"
