"""
Sparse Bounds - Core Library

`src` is used as an importable package by:
- the engine (`src/core/`)
- the standalone CLI (`src/cli/`)
"""

__all__ = []
