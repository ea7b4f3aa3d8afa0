"""
Closed-Form Lower Bounds and Reference Rates

Minimax risk lower bounds for k-sparse estimation under a fixed design A,
the exact fixed-support (oracle) risk, and the reference rates the bounds are
compared against. Logarithms are natural everywhere.

Unbounded risks are returned as ``math.inf``; serializers turn them into the
string "unbounded".
"""

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple, Optional, Tuple

import numpy as np

from .errors import EnumerationCapError, PreconditionError
from .linalg import (
    DenseMatrix,
    column_submatrix,
    frobenius_norm_sq,
    gram_rank_floor,
    reduced_svd,
    sym_eigen,
)

logger = logging.getLogger(__name__)

UNBOUNDED = math.inf
LOG_BASE = "natural"
BRUTEFORCE_CAP = 10**6
DEFAULT_C0 = 1.0
ASYMPTOTIC_C1 = 1.0 / 128.0


class NoiseKind(str, Enum):
    """Where the Gaussian noise enters the model."""
    MEASUREMENT = "measurement"  # y = A x + z
    SIGNAL = "signal"  # y = A (x + w)


@dataclass(frozen=True)
class NoiseModel:
    kind: NoiseKind
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        _check_sigma(self.sigma)


class ClosedFormBound(NamedTuple):
    value: float
    vacuous: bool


class SupportBound(NamedTuple):
    value: float
    support: Tuple[int, ...]


class WhitenedDesign(NamedTuple):
    vstar: DenseMatrix
    rank: int


def is_unbounded(value: Optional[float]) -> bool:
    return value is not None and math.isinf(value)


def risk_to_json(value: Optional[float]):
    """JSON-safe risk: the string "unbounded" in place of infinity."""
    if value is None:
        return None
    if math.isinf(value):
        return "unbounded"
    return float(value)


def _check_sigma(sigma: float) -> None:
    if not (sigma > 0 and math.isfinite(sigma)):
        raise PreconditionError(f"sigma must be positive and finite, got {sigma}")


def _check_k(k: int, n: int) -> None:
    if not 1 <= k <= n:
        raise PreconditionError(f"k must satisfy 1 <= k <= n={n}, got {k}")


def check_lemma_preconditions(n: int, k: int) -> None:
    """The packing construction needs k even and k < n/2."""
    if k < 2 or k % 2 != 0:
        raise PreconditionError(f"k must be even and positive for the packing construction, got {k}")
    if not 2 * k < n:
        raise PreconditionError(f"the packing construction needs k < n/2, got k={k}, n={n}")


def bound_simple(a: DenseMatrix, k: int, sigma: float) -> float:
    """M*(A) >= k sigma^2 / ||A||_F^2, unbounded for the zero matrix."""
    _check_k(k, a.cols)
    _check_sigma(sigma)
    fro = frobenius_norm_sq(a)
    if fro == 0.0:
        return UNBOUNDED
    return k * sigma * sigma / fro


def bound_fano_closed(frobenius_sq: float, n: int, k: int, sigma: float, beta: float = 0.0) -> ClosedFormBound:
    """Explicit Fano chain: sigma^2 ((k/4) ln(n/k) - 2) / (32 (1+beta) ||A||_F^2).

    Clamped to 0 and flagged vacuous when the numerator is not positive.
    """
    check_lemma_preconditions(n, k)
    _check_sigma(sigma)
    if beta < 0:
        raise PreconditionError(f"beta must be non-negative, got {beta}")
    if not frobenius_sq > 0:
        raise PreconditionError(f"frobenius_sq must be positive, got {frobenius_sq}")
    numerator = (k / 4.0) * math.log(n / k) - 2.0
    if numerator <= 0:
        return ClosedFormBound(0.0, True)
    return ClosedFormBound(sigma * sigma * numerator / (32.0 * (1.0 + beta) * frobenius_sq), False)


def asymptotic_fano_bound(frobenius_sq: float, n: int, k: int, sigma: float) -> float:
    """Large-n form of the Fano bound with C1 = 1/128."""
    _check_sigma(sigma)
    if not frobenius_sq > 0:
        raise PreconditionError(f"frobenius_sq must be positive, got {frobenius_sq}")
    return ASYMPTOTIC_C1 * k * sigma * sigma * math.log(n / k) / frobenius_sq


def _support_risk(a: DenseMatrix, support: Tuple[int, ...], sigma: float, n: int) -> float:
    sub = column_submatrix(a, support)
    if sub.cols > sub.rows:
        return UNBOUNDED
    lam = sym_eigen(sub.gram()).eigenvalues
    lam_max = float(lam[-1])
    if lam_max <= 0.0 or float(lam[0]) <= gram_rank_floor(lam_max, len(support)):
        return UNBOUNDED
    return sigma * sigma / n * math.fsum((1.0 / lam).tolist())


def oracle_support_risk(a: DenseMatrix, support: Iterable[int], sigma: float, n: Optional[int] = None) -> float:
    """Exact minimax risk when the support T is known: (sigma^2/n) sum 1/lambda_i(A_T* A_T)."""
    _check_sigma(sigma)
    n = a.cols if n is None else n
    return _support_risk(a, tuple(support), sigma, n)


def minimax_supports_bruteforce(a: DenseMatrix, k: int, sigma: float, cap: int = BRUTEFORCE_CAP) -> SupportBound:
    """Maximum oracle risk over every support of size k.

    Supports are visited in lexicographic order and only a strictly larger
    value replaces the incumbent, so ties resolve to the smallest support.
    """
    n = a.cols
    _check_k(k, n)
    _check_sigma(sigma)
    count = math.comb(n, k)
    if count > cap:
        raise EnumerationCapError(f"C({n},{k}) = {count} supports exceeds the cap of {cap}")

    if k > a.rows:
        return SupportBound(UNBOUNDED, tuple(range(k)))

    best_value = -1.0
    best_support: Tuple[int, ...] = ()
    for support in itertools.combinations(range(n), k):
        value = _support_risk(a, support, sigma, n)
        if value > best_value:
            best_value, best_support = value, support
            if math.isinf(value):
                break
    logger.debug("brute force over %d supports: max %.6g at %s", count, best_value, best_support)
    return SupportBound(best_value, best_support)


def worst_columns_bound(a: DenseMatrix, k: int, sigma: float) -> SupportBound:
    """k^2 sigma^2 / (n ||A_T0||_F^2) for the k columns of smallest norm."""
    n = a.cols
    _check_k(k, n)
    _check_sigma(sigma)
    norms = a.column_norms_sq()
    support = tuple(sorted(int(i) for i in np.argsort(norms, kind="stable")[:k]))
    fro = frobenius_norm_sq(column_submatrix(a, support))
    if fro == 0.0:
        return SupportBound(UNBOUNDED, support)
    return SupportBound(k * k * sigma * sigma / (n * fro), support)


def averaging_oracle_risk(n: int, k: int, m: int, sigma: float, strict: bool = True) -> float:
    """Risk of measuring each support coefficient m/k times and averaging.

    With ``strict`` the divisibility k | m is enforced; otherwise the formula
    is evaluated as a reference rate.
    """
    _check_k(k, n)
    _check_sigma(sigma)
    if m < 1:
        raise PreconditionError(f"m must be positive, got {m}")
    if strict and m % k != 0:
        raise PreconditionError(f"k={k} must divide m={m}")
    return (k * sigma * sigma / m) * (k / n)


def dantzig_reference_rate(n: float, k: float, m: float, sigma: float, c0: float = DEFAULT_C0) -> float:
    """C0 k sigma^2 ln(n) / m: the l1 upper-bound rate, a comparison curve."""
    if min(n, k, m, sigma, c0) <= 0:
        raise PreconditionError("reference rate arguments must be positive")
    return c0 * k * sigma * sigma * math.log(n) / m


def oracle_to_ds_gap(n: int, k: int) -> float:
    """Ratio of the l1 reference rate to the averaging oracle rate: (n/k) ln n."""
    return (n / k) * math.log(n)


def corollary_bounds(m: int, n: int, k: int, sigma: float, beta: float = 0.0) -> Tuple[float, ClosedFormBound]:
    """Design-free bounds under signal noise: k sigma^2/m and the Fano chain at ||A||_F^2 = m."""
    _check_k(k, n)
    _check_sigma(sigma)
    if m < 1:
        raise PreconditionError(f"m must be positive, got {m}")
    return k * sigma * sigma / m, bound_fano_closed(float(m), n, k, sigma, beta)


def whiten_noise_folding(a: DenseMatrix, sigma: float) -> WhitenedDesign:
    """Reduce y = A(x + w) to y' = V* x + V* w with white noise of variance sigma^2.

    Applying Sigma^-1 U* to y keeps all information about x; the effective
    design V* has orthonormal rows and ||V*||_F^2 = rank <= m.
    """
    _check_sigma(sigma)
    svd = reduced_svd(a)
    if svd.rank == 0:
        raise PreconditionError("cannot whiten the zero matrix")
    return WhitenedDesign(svd.vstar, svd.rank)
