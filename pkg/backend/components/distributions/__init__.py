"""
Exact finite distributions, harmonic mixtures and majority pushforwards.
"""
