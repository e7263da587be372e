"""Encoder-based warm-starting of Bayesian hyperparameter optimisation for tabular data."""

__version__ = "0.1.0"
