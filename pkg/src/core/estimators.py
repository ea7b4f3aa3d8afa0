"""
Estimators

Concrete estimators used to sandwich the lower bounds: least squares on a
known support, the averaging design that realises the oracle rate, and the
Lasso solved by cyclic coordinate descent.

Every estimator object is called as ``estimator(A, y, support)`` and returns
a dense length-n estimate; estimators that do not use the true support
ignore it.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatchError, EstimatorFailure, PreconditionError, RankDeficientError
from .linalg import DenseMatrix, column_submatrix, gram_rank_floor, sym_eigen
from .packing import SparseVector

logger = logging.getLogger(__name__)

LASSO_TOL = 1e-8
LASSO_MAX_ITER = 10_000


class Estimator(Protocol):
    name: str

    def __call__(self, a: DenseMatrix, y: np.ndarray, support: Sequence[int]) -> np.ndarray:
        ...


def _support_solver(a: DenseMatrix, support: Tuple[int, ...]) -> np.ndarray:
    """(A_T* A_T)^-1 A_T* via the eigendecomposition of the Gram matrix."""
    sub = column_submatrix(a, support)
    if sub.cols > sub.rows:
        raise RankDeficientError(f"support of size {sub.cols} exceeds the {sub.rows} measurements")
    eig = sym_eigen(sub.gram())
    lam = eig.eigenvalues
    lam_max = float(lam[-1])
    if lam_max <= 0.0 or float(lam[0]) <= gram_rank_floor(lam_max, len(support)):
        raise RankDeficientError(f"A_T is rank deficient on support {support}")
    v = eig.eigenvectors
    return (v / lam) @ v.T @ sub.array.T


def oracle_ls(a: DenseMatrix, support: Iterable[int], y: np.ndarray) -> SparseVector:
    """Least squares restricted to ``support``, zero elsewhere."""
    y = np.asarray(y, dtype=float)
    if y.shape != (a.rows,):
        raise DimensionMismatchError(f"y has shape {y.shape}, expected ({a.rows},)")
    idx = tuple(sorted(int(i) for i in support))
    coef = _support_solver(a, idx) @ y
    return SparseVector(a.cols, idx, tuple(coef.tolist()))


def averaging_design(n: int, k: int, m: int, support: Iterable[int]) -> DenseMatrix:
    """Rows are standard basis vectors; each support index repeats m/k times, contiguously."""
    idx = sorted(int(i) for i in support)
    if len(idx) != k or len(set(idx)) != k:
        raise PreconditionError(f"support must have exactly k={k} distinct indices")
    if any(i < 0 or i >= n for i in idx):
        raise PreconditionError(f"support indices must lie in [0, {n})")
    if m < 1 or m % k != 0:
        raise PreconditionError(f"k={k} must divide m={m}")
    reps = m // k
    rows = np.zeros((m, n))
    for block, j in enumerate(idx):
        rows[block * reps:(block + 1) * reps, j] = 1.0
    return DenseMatrix(rows)


def soft_threshold(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


def default_lambda(a: DenseMatrix, sigma: float) -> float:
    """2 sigma sqrt(2 ln n) times the largest column norm."""
    return 2.0 * sigma * math.sqrt(2.0 * math.log(a.cols)) * math.sqrt(float(np.max(a.column_norms_sq())))


def lasso_objective(a: DenseMatrix, y: np.ndarray, coef: np.ndarray, lam: float) -> float:
    r = y - a.array @ coef
    return 0.5 * float(r @ r) + lam * float(np.sum(np.abs(coef)))


@dataclass
class LassoResult:
    coef: np.ndarray
    cycles: int
    converged: bool
    max_change: float
    objective_history: List[float] = field(default_factory=list)


def lasso_cd(
    a: DenseMatrix,
    y: np.ndarray,
    lam: float,
    tol: float = LASSO_TOL,
    max_iter: int = LASSO_MAX_ITER,
    warm_start: Optional[np.ndarray] = None,
) -> LassoResult:
    """Minimise 0.5 ||y - A x||^2 + lam ||x||_1 by cyclic coordinate descent.

    Full cycles alternate with cycles over the current nonzeros; the run
    stops once a full cycle moves no coordinate by more than ``tol``.
    Columns that are identically zero keep coefficient 0. On hitting
    ``max_iter`` cycles the last iterate is returned with ``converged=False``.
    """
    if not lam > 0:
        raise PreconditionError(f"lambda must be positive, got {lam}")
    y = np.asarray(y, dtype=float)
    if y.shape != (a.rows,):
        raise DimensionMismatchError(f"y has shape {y.shape}, expected ({a.rows},)")

    cols = np.asfortranarray(a.array)
    col_sq = a.column_norms_sq()
    n = a.cols
    coef = np.zeros(n) if warm_start is None else np.array(warm_start, dtype=float)
    residual = y - cols @ coef
    history = [lasso_objective(a, y, coef, lam)]

    def cycle(indices: Iterable[int]) -> float:
        nonlocal residual
        biggest = 0.0
        for j in indices:
            if col_sq[j] == 0.0:
                continue
            aj = cols[:, j]
            old = coef[j]
            z = old + float(aj @ residual) / col_sq[j]
            new = soft_threshold(z, lam / col_sq[j])
            delta = new - old
            if delta != 0.0:
                residual -= delta * aj
                coef[j] = new
                biggest = max(biggest, abs(delta))
        return biggest

    cycles = 0
    max_change = math.inf
    converged = False
    full = True
    while cycles < max_iter:
        if full:
            max_change = cycle(range(n))
        else:
            max_change = cycle(np.flatnonzero(coef).tolist())
        cycles += 1
        history.append(lasso_objective(a, y, coef, lam))
        if max_change <= tol:
            if full:
                converged = True
                break
            full = True
        else:
            full = False

    if not converged:
        logger.warning("lasso did not converge in %d cycles (last change %.3e)", max_iter, max_change)
    return LassoResult(coef=coef, cycles=cycles, converged=converged, max_change=max_change,
                       objective_history=history)


class OracleLeastSquares:
    """Least squares on the true support; solvers are cached per support."""
    name = "oracle-ls"

    def __init__(self, support: Optional[Sequence[int]] = None):
        self.fixed_support = None if support is None else tuple(sorted(int(i) for i in support))
        self._solvers: Dict[Tuple[int, ...], np.ndarray] = {}
        self._design: Optional[DenseMatrix] = None

    def __call__(self, a: DenseMatrix, y: np.ndarray, support: Sequence[int]) -> np.ndarray:
        idx = self.fixed_support or tuple(sorted(int(i) for i in support))
        if self._design is not a:
            self._solvers.clear()
            self._design = a
        solver = self._solvers.get(idx)
        if solver is None:
            solver = _support_solver(a, idx)
            self._solvers[idx] = solver
        out = np.zeros(a.cols)
        out[list(idx)] = solver @ y
        return out


class LassoEstimator:
    """Lasso with a fixed lambda or the default rule at call time."""
    name = "lasso"

    def __init__(
        self,
        lam: Optional[float] = None,
        sigma: float = 1.0,
        tol: float = LASSO_TOL,
        max_iter: int = LASSO_MAX_ITER,
    ):
        self.lam = lam
        self.sigma = sigma
        self.tol = tol
        self.max_iter = max_iter

    def __call__(self, a: DenseMatrix, y: np.ndarray, support: Sequence[int]) -> np.ndarray:
        lam = self.lam if self.lam is not None else default_lambda(a, self.sigma)
        result = lasso_cd(a, y, lam, tol=self.tol, max_iter=self.max_iter)
        if not result.converged:
            raise EstimatorFailure(f"lasso did not converge within {result.cycles} cycles")
        return result.coef


class ZeroEstimator:
    """Always estimates 0."""
    name = "zero"

    def __call__(self, a: DenseMatrix, y: np.ndarray, support: Sequence[int]) -> np.ndarray:
        return np.zeros(a.cols)


ESTIMATORS = ("oracle-ls", "lasso", "zero")


def make_estimator(name: str, **options) -> Estimator:
    """Build an estimator by CLI name."""
    if name == "oracle-ls":
        return OracleLeastSquares(options.get("support"))
    if name == "lasso":
        return LassoEstimator(
            lam=options.get("lam"),
            sigma=options.get("sigma", 1.0),
            tol=options.get("tol", LASSO_TOL),
            max_iter=options.get("max_iter", LASSO_MAX_ITER),
        )
    if name == "zero":
        return ZeroEstimator()
    raise PreconditionError(f"unknown estimator {name!r}; choose one of {', '.join(ESTIMATORS)}")
