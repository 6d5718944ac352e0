"""Vertical-extended Hamiltonian mechanics.

Symbolic derivation and numerical integration of Hamilton and Jacobi-field
equations, plus a truncated Gaussian-Hermite representation of the
prequantization algebra.
"""

__version__ = "0.1.0"
