"""
Stability audit: exact and Monte Carlo checkers for every stability
definition, the conversion relations between them and the subsample witness.
"""
