"""Computations with discrete subgroups of PU(n, 1): parabolic Stein criteria,
critical exponents and Patterson-Sullivan log-mass functions."""

__version__ = "0.1.0"
