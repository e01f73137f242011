"""Exact and simulated L2 errors of Riemann approximations of Lévy stochastic integrals."""

__version__ = "0.1.0"
