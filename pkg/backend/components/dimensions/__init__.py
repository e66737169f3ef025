"""Combinatorial dimensions of hypothesis classes and the consistency game."""
