"""
Core: settings, logging, errors, budgets and the pipeline orchestrator.
"""

from .settings import settings, Settings

__all__ = [
    'settings',
    'Settings'
]
