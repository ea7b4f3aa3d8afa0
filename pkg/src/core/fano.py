"""
Fano Certificates

Per-matrix lower bound on the minimax risk built from a packing set.

Rescaling a unit-scale packing P by c = 4 sqrt(n M) makes every pairwise
squared distance at least c^2/2 = 8 n M. If an estimator had worst-case risk
M, Fano's inequality would force

    (1/2) ln|P| - 1 <= I(x; y) <= c^2 S_bar / sigma^2 = 16 n M S_bar / sigma^2,

where S_bar = (1/(2|P|^2)) sum_ij ||A(x_i - x_j)||^2 on the unit-scale points.
Hence no estimator reaches risk below

    M_cert = sigma^2 ((1/2) ln|P| - 1) / (16 n S_bar).

The bound holds for every M < M_cert; M_cert itself is the limiting value.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from .bounds import bound_fano_closed, check_lemma_preconditions
from .errors import DimensionMismatchError, InconsistencyError, PreconditionError
from .linalg import DenseMatrix, frobenius_norm_sq
from .packing import DIST_SLACK, MIN_DIST_SQ, PackingSet, SparseVector, build_packing, empirical_moments

logger = logging.getLogger(__name__)

ENERGY_REL_TOL = 1e-9


class FanoConstant(float, Enum):
    """Additive constant subtracted in the entropy term."""
    UNIT = 1.0
    NATS = math.log(2.0)


@dataclass(frozen=True)
class FanoCertificate:
    packing_ref: str
    size: int
    n: int
    s_bar: float
    entropy_term: float
    m_cert: float
    sigma: float
    vacuous: bool
    packing_seed: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "size": self.size,
            "S_bar": self.s_bar,
            "entropy_term": self.entropy_term,
            "M_cert": self.m_cert,
            "vacuous": self.vacuous,
            "packing_seed": self.packing_seed,
        }


@dataclass(frozen=True)
class CertificateComparison:
    certificate: FanoCertificate
    closed_form: Optional[float]
    closed_form_vacuous: bool
    beta: float
    lemma_sized: bool

    @property
    def dominates(self) -> Optional[bool]:
        if self.closed_form is None or self.closed_form_vacuous:
            return None
        return self.certificate.m_cert >= self.closed_form

    def to_dict(self) -> Dict[str, Any]:
        return {
            "M_cert": self.certificate.m_cert,
            "closed_form": self.closed_form,
            "closed_form_vacuous": self.closed_form_vacuous,
            "beta": self.beta,
            "lemma_sized": self.lemma_sized,
            "dominates": self.dominates,
        }


def _check_sigma(sigma: float) -> None:
    if not (sigma > 0 and math.isfinite(sigma)):
        raise PreconditionError(f"sigma must be positive and finite, got {sigma}")


def _check_design(a: DenseMatrix, n: int) -> None:
    if a.cols != n:
        raise DimensionMismatchError(f"design has {a.cols} columns but points live in R^{n}")


def gaussian_kl(a: DenseMatrix, xi: SparseVector, xj: SparseVector, sigma: float) -> float:
    """KL divergence between N(A xi, sigma^2 I) and N(A xj, sigma^2 I)."""
    _check_sigma(sigma)
    if xi.n != xj.n:
        raise DimensionMismatchError(f"points have dimensions {xi.n} and {xj.n}")
    _check_design(a, xi.n)
    r = a.array @ (xi.to_dense() - xj.to_dense())
    return float(r @ r) / (2.0 * sigma * sigma)


def _pairwise_sum(images: np.ndarray) -> float:
    """sum over ordered pairs (i, j) of ||images[:, i] - images[:, j]||^2, index ordered."""
    total = 0.0
    for i in range(images.shape[1]):
        diff = images - images[:, i:i + 1]
        total += float(np.sum(diff * diff))
    return total


def mutual_info_upper(a: DenseMatrix, packing: PackingSet, sigma: float) -> float:
    """Average pairwise KL divergence, an upper bound on I(x; y) for x uniform on P."""
    _check_sigma(sigma)
    if packing.size < 2:
        raise PreconditionError("need at least two points")
    _check_design(a, packing.n)
    images = a.array @ packing.dense().T
    return _pairwise_sum(images) / (2.0 * sigma * sigma * packing.size**2)


def pairwise_energy(a: DenseMatrix, packing: PackingSet) -> float:
    """S_bar = (1/(2|P|^2)) sum_ij ||A(x_i - x_j)||^2 on unit-scale points.

    Evaluated directly and through tr(A*A Q) - ||A mu||^2; the two must agree.

    Raises:
        InconsistencyError: the evaluations differ by more than ENERGY_REL_TOL.
    """
    if packing.scale != 1.0:
        raise PreconditionError(f"pairwise energy is defined on unit-scale points, got scale {packing.scale}")
    _check_design(a, packing.n)
    size = packing.size
    images = a.array @ packing.dense().T
    direct = _pairwise_sum(images) / (2.0 * size * size)

    moments = empirical_moments(packing)
    trace_term = float(np.sum((a.array @ moments.q) * a.array))
    a_mu = a.array @ moments.mu
    via_moments = trace_term - float(a_mu @ a_mu)

    if abs(direct - via_moments) > ENERGY_REL_TOL * max(abs(direct), abs(trace_term)):
        raise InconsistencyError(f"pairwise energy mismatch: direct {direct!r} vs moments {via_moments!r}")
    return direct


def certificate(
    a: DenseMatrix,
    packing: PackingSet,
    sigma: float,
    fano_constant: FanoConstant = FanoConstant.UNIT,
) -> FanoCertificate:
    """Certified lower bound M_cert on the minimax risk of design ``a``."""
    _check_sigma(sigma)
    if packing.scale != 1.0:
        raise PreconditionError(f"certificates need a unit-scale packing, got scale {packing.scale}")
    if packing.size < 2:
        raise PreconditionError("need at least two points")
    if packing.measured_min_dist_sq < MIN_DIST_SQ - DIST_SLACK:
        raise PreconditionError(
            f"packing separation {packing.measured_min_dist_sq} is below {MIN_DIST_SQ}"
        )
    s_bar = pairwise_energy(a, packing)
    entropy_term = 0.5 * math.log(packing.size) - float(fano_constant)
    vacuous = entropy_term <= 0.0 or s_bar <= 0.0
    m_cert = 0.0 if vacuous else sigma * sigma * entropy_term / (16.0 * packing.n * s_bar)
    if vacuous:
        logger.warning("vacuous certificate: |P|=%d, S_bar=%.3g", packing.size, s_bar)
    return FanoCertificate(
        packing_ref=packing.ref,
        size=packing.size,
        n=packing.n,
        s_bar=s_bar,
        entropy_term=entropy_term,
        m_cert=m_cert,
        sigma=sigma,
        vacuous=vacuous,
        packing_seed=packing.seed,
    )


def certificate_vs_closed_form(a: DenseMatrix, packing: PackingSet, sigma: float) -> CertificateComparison:
    """The certificate next to the closed-form chain at beta = measured beta.

    When |P| >= (n/k)^(k/4) the certificate can only be larger, because
    S_bar <= tr(A*A Q) <= ||A||_F^2 (1 + beta)/n.

    Raises:
        InconsistencyError: a lemma-sized packing produced a certificate
            below the non-vacuous closed form.
    """
    cert = certificate(a, packing, sigma)
    n, k = packing.n, packing.k
    lemma_sized = packing.size >= (n / k) ** (k / 4.0)
    fro = frobenius_norm_sq(a)
    closed_value: Optional[float] = None
    closed_vacuous = True
    try:
        check_lemma_preconditions(n, k)
    except PreconditionError:
        pass
    else:
        if fro > 0:
            closed = bound_fano_closed(fro, n, k, sigma, packing.measured_beta)
            closed_value, closed_vacuous = closed.value, closed.vacuous

    comparison = CertificateComparison(cert, closed_value, closed_vacuous, packing.measured_beta, lemma_sized)
    if lemma_sized and comparison.dominates is False:
        raise InconsistencyError(
            f"certificate {cert.m_cert!r} below closed form {closed_value!r} for a lemma-sized packing"
        )
    return comparison


def certificate_family(
    a: DenseMatrix,
    k: int,
    sizes: Iterable[int],
    sigma: float,
    seed: int,
) -> List[FanoCertificate]:
    """Certificates over several packing sizes, best (largest M_cert) first."""
    certs = []
    for size in sizes:
        packing = build_packing(a.cols, k, size, seed)
        certs.append(certificate(a, packing, sigma))
    return sorted(certs, key=lambda c: (-c.m_cert, c.size))
