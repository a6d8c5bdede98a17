"""Cauchy problem for the Klein-Gordon equation u_xx - u_tt - q(x) u = 0 via
transmuted power bases and generalized wave polynomials."""

__version__ = "0.1.0"
