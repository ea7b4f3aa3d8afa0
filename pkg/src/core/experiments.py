"""
Experiments

Desk-scale experiments combining the engine pieces: the lower-bound versus
Lasso comparison across a sweep of m, and the operational check of a Fano
certificate on a Gaussian design.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from .bounds import DEFAULT_C0, averaging_oracle_risk, dantzig_reference_rate
from .errors import PreconditionError
from .estimators import LASSO_MAX_ITER, LASSO_TOL, LassoEstimator, OracleLeastSquares
from .fano import CertificateComparison, certificate_vs_closed_form
from .linalg import DenseMatrix, frobenius_norm_sq
from .montecarlo import (
    SIGNAL_STREAM,
    RiskEstimate,
    gaussian_design,
    packing_bayes_risk,
    stream_rng,
    worst_case_risk,
)
from .packing import PackingSet, SparseVector, build_packing, lemma_size, universe_sample
from .recipes import CertifyParameters, CompareParameters
from .report import ReportOptions, full_report

logger = logging.getLogger(__name__)

COMPARE_COLUMNS = ["m", "lower_bound", "certificate", "lasso_risk", "oracle_rate", "ds_rate"]


def detection_signal_norm(design: DenseMatrix, k: int, sigma: float) -> float:
    """Norm of a k-sparse signal whose entries sit at the universal threshold.

    Each entry has size sigma sqrt(2 ln n) over the RMS column norm of
    ``design``, so ||x||^2 / n = 2 k sigma^2 ln(n) / ||A||_F^2.
    """
    n = design.cols
    fro = frobenius_norm_sq(design)
    if fro == 0.0:
        raise PreconditionError("design has no nonzero column")
    return sigma * math.sqrt(2.0 * k * math.log(n) * n / fro)


def draw_signals(n: int, k: int, count: int, norm: float, seed: int, index: int = 0) -> List[SparseVector]:
    """``count`` random universe points rescaled to Euclidean norm ``norm``."""
    if count < 1:
        raise PreconditionError(f"need at least one signal, got {count}")
    rng = stream_rng(seed, SIGNAL_STREAM, index)
    return [universe_sample(n, k, rng).scaled(norm) for _ in range(count)]


def compare_table(
    params: CompareParameters,
    c0: float = DEFAULT_C0,
    lasso_tol: float = LASSO_TOL,
    lasso_max_iter: int = LASSO_MAX_ITER,
) -> pd.DataFrame:
    """One row per m: best lower bound, certificate, worst Lasso risk and reference rates.

    Design i is drawn from its own stream; the certificate uses a lemma-sized
    packing built from the experiment seed.
    """
    n, k, sigma = params.n, params.k, params.sigma
    if not params.m_values:
        raise PreconditionError("m_values must not be empty")
    packing = build_packing(n, k, max(lemma_size(n, k), 2), params.seed)
    estimator = LassoEstimator(sigma=sigma, tol=lasso_tol, max_iter=lasso_max_iter)

    rows: List[Dict[str, Any]] = []
    for i, m in enumerate(params.m_values):
        design = gaussian_design(m, n, params.seed, i)
        report = full_report(design, k, sigma, options=ReportOptions(c0=c0, packing=packing))
        norm = params.signal_norm if params.signal_norm is not None else detection_signal_norm(design, k, sigma)
        signals = draw_signals(n, k, params.signals, norm, params.seed, i)
        risk = worst_case_risk(design, estimator, signals, sigma, params.trials, params.seed)
        cert = report.certificate.certificate
        rows.append({
            "m": m,
            "lower_bound": report.best_lower_bound,
            "certificate": cert.m_cert,
            "lasso_risk": risk.mean_risk,
            "oracle_rate": averaging_oracle_risk(n, k, m, sigma, strict=False),
            "ds_rate": dantzig_reference_rate(n, k, m, sigma, c0),
        })
        logger.info(
            "m=%d: lower bound %.4g, lasso %.4g (+- %.2g), ds rate %.4g",
            m, report.best_lower_bound, risk.mean_risk, risk.std_error, rows[-1]["ds_rate"],
        )
    return pd.DataFrame(rows, columns=COMPARE_COLUMNS)


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log y against log x."""
    if len(x) != len(y) or len(x) < 2:
        raise PreconditionError("need at least two matching points")
    lx = [math.log(v) for v in x]
    ly = [math.log(v) for v in y]
    mx = math.fsum(lx) / len(lx)
    my = math.fsum(ly) / len(ly)
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(lx, ly))
    sxx = math.fsum((a - mx) ** 2 for a in lx)
    return sxy / sxx


@dataclass(frozen=True)
class CertificateCheck:
    design: DenseMatrix
    packing: PackingSet
    comparison: CertificateComparison
    level: float
    risks: Dict[str, RiskEstimate]

    def exceeds(self, name: str, z: float = 3.0) -> bool:
        """Whether the Bayes risk of ``name`` is above the level by more than z standard errors."""
        risk = self.risks[name]
        return risk.mean_risk - self.level > z * risk.std_error

    def to_dict(self) -> Dict[str, Any]:
        return {
            "certificate": self.comparison.certificate.to_dict(),
            "closed_form": self.comparison.to_dict(),
            "level": self.level,
            "risks": {name: r.to_dict() for name, r in self.risks.items()},
            "exceeds_level": {name: self.exceeds(name) for name in self.risks},
        }


def certificate_check(
    params: CertifyParameters,
    packing_size: Optional[int] = None,
    lasso_tol: float = LASSO_TOL,
    lasso_max_iter: int = LASSO_MAX_ITER,
) -> CertificateCheck:
    """Bayes risk over the rescaled packing at a fraction of M_cert.

    A valid certificate means every estimator's Bayes risk at level
    ``level_fraction * M_cert`` stays above that level.
    """
    if not 0 < params.level_fraction < 1:
        raise PreconditionError(f"level_fraction must lie in (0, 1), got {params.level_fraction}")
    design = gaussian_design(params.m, params.n, params.seed)
    size = packing_size or max(lemma_size(params.n, params.k), 2)
    packing = build_packing(params.n, params.k, size, params.seed)
    comparison = certificate_vs_closed_form(design, packing, params.sigma)
    cert = comparison.certificate
    if cert.vacuous:
        raise PreconditionError(f"certificate is vacuous for |P|={cert.size}; use a larger packing")
    level = params.level_fraction * cert.m_cert

    estimators = [
        OracleLeastSquares(),
        LassoEstimator(sigma=params.sigma, tol=lasso_tol, max_iter=lasso_max_iter),
    ]
    risks = {
        est.name: packing_bayes_risk(design, packing, level, est, params.sigma, params.trials, params.seed)
        for est in estimators
    }
    return CertificateCheck(design, packing, comparison, level, risks)
