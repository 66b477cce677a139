"""2D cubic FPUT lattice and its nonlinear-Schrodinger wave-packet laboratory."""

__version__ = "0.1.0"
