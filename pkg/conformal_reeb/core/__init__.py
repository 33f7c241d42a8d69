"""Core contracts, errors and logging."""
