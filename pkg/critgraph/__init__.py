"""Simulation lab for critical random graphs, their percolation windows and scaling limits."""

__version__ = '0.1.0'
