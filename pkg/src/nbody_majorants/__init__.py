"""Majorant series and certified fixed-step integration for the gravitational N-body problem."""

__version__ = "0.1.0"
