"""Asymptotic linking numbers of divergence-free flows, checked against Hopf-type integrals."""

__version__ = "0.1.0"
