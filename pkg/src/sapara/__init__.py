"""Paraphrase generation by simulated annealing with learned surrogate objectives."""

__version__ = "0.1.0"
