"""Stability boosting: the boosted learner, its prior and the KL ledger."""
