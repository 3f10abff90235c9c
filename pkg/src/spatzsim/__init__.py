"""Cycle-approximate simulator of Spatz vector units and clusters sharing one L1 scratchpad."""

__version__ = "0.1.0"
