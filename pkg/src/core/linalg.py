"""
Dense Linear Algebra

Small, self-contained dense kernels used by every other module: norms,
column extraction, a cyclic Jacobi eigensolver for symmetric matrices and a
reduced SVD obtained from the smaller Gram matrix. numpy is used for element
storage and vector arithmetic only; no LAPACK routine is called.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .errors import ConvergenceError, DimensionMismatchError, InputError, PreconditionError

logger = logging.getLogger(__name__)

# Cyclic Jacobi budget and stopping rule.
MAX_SWEEPS = 100
OFFDIAG_TOL = 1e-12
SYMMETRY_TOL = 1e-10

# Singular value sigma_i is kept iff sigma_i > RANK_TOL * sigma_max.
RANK_TOL = 1e-10

_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True, eq=False)
class DenseMatrix:
    """Real rows x cols matrix with finite entries, read-only after construction."""
    array: np.ndarray

    def __post_init__(self):
        arr = np.array(self.array, dtype=float, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InputError(f"matrix must be two-dimensional and non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InputError("matrix entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "array", arr)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]]) -> "DenseMatrix":
        widths = {len(r) for r in rows}
        if len(widths) > 1:
            raise InputError(f"ragged rows: widths {sorted(widths)}")
        return cls(np.asarray(rows, dtype=float))

    @classmethod
    def identity(cls, n: int, scale: float = 1.0) -> "DenseMatrix":
        return cls(scale * np.eye(n))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "DenseMatrix":
        return cls(np.zeros((rows, cols)))

    @property
    def rows(self) -> int:
        return self.array.shape[0]

    @property
    def cols(self) -> int:
        return self.array.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.array.shape

    def scaled(self, c: float) -> "DenseMatrix":
        return DenseMatrix(c * self.array)

    def transpose(self) -> "DenseMatrix":
        return DenseMatrix(self.array.T)

    def gram(self) -> "DenseMatrix":
        """A* A, symmetrized."""
        g = self.array.T @ self.array
        return DenseMatrix(0.5 * (g + g.T))

    def column_norms_sq(self) -> np.ndarray:
        return np.einsum("ij,ij->j", self.array, self.array)

    def __repr__(self) -> str:
        return f"DenseMatrix({self.rows}x{self.cols})"


@dataclass(frozen=True, eq=False)
class SymEigen:
    """Eigenvalues in ascending order with matching orthonormal eigenvector columns."""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


@dataclass(frozen=True, eq=False)
class ReducedSvd:
    """A = U diag(s) V*, singular values descending, rank = number retained."""
    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray
    rank: int

    @property
    def vstar(self) -> Optional[DenseMatrix]:
        if self.rank == 0:
            return None
        return DenseMatrix(self.v.T)

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.singular_values) @ self.v.T


def frobenius_norm_sq(a: DenseMatrix) -> float:
    """Sum of squared entries, correctly rounded."""
    return math.fsum((a.array * a.array).ravel().tolist())


def column_submatrix(a: DenseMatrix, support: Iterable[int]) -> DenseMatrix:
    """Columns of ``a`` indexed by ``support``, in ascending index order."""
    idx = _validate_support(support, a.cols)
    return DenseMatrix(a.array[:, list(idx)])


def _validate_support(support: Iterable[int], n: int) -> Tuple[int, ...]:
    idx = tuple(int(i) for i in support)
    if not idx:
        raise PreconditionError("index set must be non-empty")
    if len(set(idx)) != len(idx):
        raise PreconditionError(f"index set has duplicates: {idx}")
    bad = [i for i in idx if i < 0 or i >= n]
    if bad:
        raise PreconditionError(f"indices out of range [0, {n}): {bad}")
    return tuple(sorted(idx))


def _check_symmetric(s: DenseMatrix) -> None:
    if s.rows != s.cols:
        raise DimensionMismatchError(f"expected a square matrix, got {s.rows}x{s.cols}")
    asym = s.array - s.array.T
    if math.sqrt(float(np.sum(asym * asym))) > SYMMETRY_TOL * math.sqrt(frobenius_norm_sq(s)):
        raise PreconditionError("matrix is not symmetric")


def _max_offdiag(a: np.ndarray) -> float:
    if a.shape[0] < 2:
        return 0.0
    off = np.abs(a)
    np.fill_diagonal(off, 0.0)
    return float(off.max())


def sym_eigen(s: DenseMatrix, max_sweeps: int = MAX_SWEEPS) -> SymEigen:
    """Full spectrum of a symmetric matrix by cyclic Jacobi rotations.

    Converged once every off-diagonal magnitude is at most
    ``OFFDIAG_TOL * ||S||_F``.

    Raises:
        ConvergenceError: still above the threshold after ``max_sweeps`` sweeps.
    """
    _check_symmetric(s)
    n = s.rows
    a = np.array(s.array, copy=True)
    v = np.eye(n)
    norm_f = math.sqrt(frobenius_norm_sq(s))
    if norm_f == 0.0:
        return SymEigen(np.zeros(n), v)

    threshold = OFFDIAG_TOL * norm_f
    skip_below = 1e-3 * threshold
    for sweep in range(max_sweeps + 1):
        if _max_offdiag(a) <= threshold:
            logger.debug("Jacobi converged after %d sweeps (n=%d)", sweep, n)
            break
        if sweep == max_sweeps:
            raise ConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps (off-diagonal {_max_offdiag(a):.3e})"
            )
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip_below:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - sn * col_q
                a[:, q] = sn * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - sn * row_q
                a[q, :] = sn * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0

                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - sn * vq
                v[:, q] = sn * vp + c * vq

    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    w = w[order]
    v = v[:, order]
    w.setflags(write=False)
    v.setflags(write=False)
    return SymEigen(w, v)


def operator_norm_sym(s: DenseMatrix, max_sweeps: int = MAX_SWEEPS) -> float:
    """Spectral norm of a symmetric matrix: max |eigenvalue|."""
    w = sym_eigen(s, max_sweeps=max_sweeps).eigenvalues
    return float(np.max(np.abs(w)))


def gram_rank_floor(lam_max: float, dim: int, rel_tol: float = RANK_TOL) -> float:
    """Smallest Gram eigenvalue still treated as nonzero.

    An eigenvalue is kept iff it exceeds both rel_tol**2 * lam_max (the
    singular value rule) and dim * eps * lam_max, the round-off level of
    eigenvalues computed from a Gram matrix.
    """
    return max(rel_tol * rel_tol, dim * _EPS) * lam_max


def reduced_svd(a: DenseMatrix, rel_tol: float = RANK_TOL, max_sweeps: int = MAX_SWEEPS) -> ReducedSvd:
    """Reduced SVD through the eigendecomposition of the smaller Gram matrix.

    The all-zero matrix yields rank 0 with empty factors.
    """
    arr = a.array
    m, n = arr.shape
    left = m <= n
    g = arr @ arr.T if left else arr.T @ arr
    eig = sym_eigen(DenseMatrix(0.5 * (g + g.T)), max_sweeps=max_sweeps)
    lam = eig.eigenvalues[::-1]
    vecs = eig.eigenvectors[:, ::-1]

    lam_max = float(lam[0])
    if lam_max <= 0.0:
        return ReducedSvd(np.zeros((m, 0)), np.zeros(0), np.zeros((n, 0)), 0)

    sv = np.sqrt(np.clip(lam, 0.0, None))
    keep = (sv > rel_tol * sv[0]) & (lam > gram_rank_floor(lam_max, g.shape[0], rel_tol))
    rank = int(np.count_nonzero(keep))
    sv = sv[:rank]
    if left:
        u = np.array(vecs[:, :rank])
        v = (arr.T @ u) / sv
    else:
        v = np.array(vecs[:, :rank])
        u = (arr @ v) / sv
    logger.debug("reduced SVD of %dx%d matrix: rank %d", m, n, rank)
    return ReducedSvd(u, sv, v, rank)
