"""
Sparse Bounds - Core Module

Minimax lower bounds for k-sparse estimation under a fixed design:
- dense linear algebra (Jacobi eigensolver, Gram-based reduced SVD)
- closed-form bounds, oracle risks and reference rates
- packing sets, Fano certificates and the matrix Bernstein check
- estimators with a seeded Monte Carlo harness
"""

from .bounds import NoiseKind, NoiseModel
from .fano import FanoCertificate, certificate
from .linalg import DenseMatrix
from .packing import PackingSet, SparseVector, build_packing
from .recipes import Recipe, RecipeManager
from .report import BoundReport, full_report

__all__ = [
    "BoundReport",
    "DenseMatrix",
    "FanoCertificate",
    "NoiseKind",
    "NoiseModel",
    "PackingSet",
    "Recipe",
    "RecipeManager",
    "SparseVector",
    "build_packing",
    "certificate",
    "full_report",
]
