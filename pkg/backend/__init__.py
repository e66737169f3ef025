"""Stability lab backend."""
