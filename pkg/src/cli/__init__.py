"""
Sparse Bounds - CLI Module

Command-line interface for bounds, packings, certificates and simulations.
"""

from .main import cli

__all__ = ["cli"]
