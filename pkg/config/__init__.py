"""Environment configuration: enumeration budgets and run settings."""
