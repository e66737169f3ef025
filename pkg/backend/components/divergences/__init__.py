"""Exact and floating-point divergences between finite distributions."""
