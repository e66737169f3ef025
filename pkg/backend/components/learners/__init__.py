"""Learning rules: exact posterior maps, samplers and baselines."""
