"""Decide small 3-SAT instances with a simulated Rydberg-atom MIS solver."""

__version__ = "1.0.0"
