"""Surrogate modeling, gradient search, and hypervolume selection."""
