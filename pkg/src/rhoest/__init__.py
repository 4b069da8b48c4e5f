"""Robust estimation by minimizing a Hellinger-affinity criterion over finite nets."""
__version__ = "0.1.0"
