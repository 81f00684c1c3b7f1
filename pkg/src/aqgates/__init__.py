"""Simulations of autonomous quantum gate protocols."""

__version__ = "0.1.0"
