"""Superposition-attack analysis of secret sharing and deterministic MPC."""

__version__ = "0.1.0"
