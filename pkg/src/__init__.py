"""
Spectral solver and experiment harness for the stationary Choquard equation

    -eps^2 Lap u + V u = eps^-alpha (I_alpha * |u|^p) |u|^(p-2) u

with limiting ground states, penalized semiclassical solves, epsilon sweeps
and numerical checks of the identities the solutions must satisfy.
"""

__version__ = "1.0.0"
