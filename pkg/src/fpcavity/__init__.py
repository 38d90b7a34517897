"""Simulation and analysis of tunable membrane-in-the-middle Fabry-Perot microcavities."""

__version__ = "0.1.0"
