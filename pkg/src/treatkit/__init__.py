"""Breast-cancer treatment classification toolkit."""

__version__ = "0.1.0"
