"""Cayley-splitting integrators and samplers for semilinear wave-type SPDEs."""

__version__ = "0.1.0"
