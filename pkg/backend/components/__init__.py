"""Stability lab components: one package per area."""
