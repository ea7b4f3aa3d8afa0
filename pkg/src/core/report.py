"""
Bound Reports

Collects every lower bound available for one design into a BoundReport,
the record behind the ``bound`` subcommand.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple, Union

import click

from .bounds import (
    BRUTEFORCE_CAP,
    DEFAULT_C0,
    LOG_BASE,
    UNBOUNDED,
    NoiseKind,
    NoiseModel,
    asymptotic_fano_bound,
    averaging_oracle_risk,
    bound_fano_closed,
    bound_simple,
    check_lemma_preconditions,
    dantzig_reference_rate,
    minimax_supports_bruteforce,
    risk_to_json,
    whiten_noise_folding,
    worst_columns_bound,
)
from .errors import PreconditionError
from .fano import CertificateComparison, certificate_vs_closed_form
from .linalg import DenseMatrix, frobenius_norm_sq
from .packing import PackingSet, build_packing, lemma_size

logger = logging.getLogger(__name__)

# Largest packing the report builds on its own.
AUTO_PACKING_CAP = 2048


@dataclass
class ReportOptions:
    """Optional parts of a report."""
    beta: float = 0.0
    c0: float = DEFAULT_C0
    cap: int = BRUTEFORCE_CAP
    packing: Optional[PackingSet] = None
    certify: bool = False
    packing_size: Optional[int] = None
    packing_seed: int = 0


@dataclass
class BoundReport:
    n: int
    m: int
    k: int
    sigma: float
    noise_model: NoiseKind
    effective_rows: int
    frobenius_sq: float
    bound_simple: float
    bound_fano_closed: Optional[float]
    fano_vacuous: Optional[bool]
    beta_used: float
    asymptotic_fano_bound: Optional[float]
    worst_columns_bound: float
    worst_columns_support: Tuple[int, ...]
    bruteforce_value: Optional[float]
    bruteforce_support: Optional[Tuple[int, ...]]
    reference_ds_rate: float
    reference_oracle_rate: float
    certificate: Optional[CertificateComparison] = None
    best_lower_bound: float = field(init=False, default=0.0)
    log_base: str = LOG_BASE

    def __post_init__(self):
        candidates = [self.bound_simple, self.worst_columns_bound]
        if self.bound_fano_closed is not None and not self.fano_vacuous:
            candidates.append(self.bound_fano_closed)
        if self.bruteforce_value is not None:
            candidates.append(self.bruteforce_value)
        if self.certificate is not None and not self.certificate.certificate.vacuous:
            candidates.append(self.certificate.certificate.m_cert)
        self.best_lower_bound = max(candidates)

    def to_dict(self) -> Dict[str, Any]:
        cert = None
        if self.certificate is not None:
            cert = self.certificate.certificate.to_dict()
            cert["closed_form_at_measured_beta"] = self.certificate.closed_form
            cert["measured_beta"] = self.certificate.beta
            cert["dominates_closed_form"] = self.certificate.dominates
        return {
            "n": self.n,
            "m": self.m,
            "k": self.k,
            "sigma": self.sigma,
            "log_base": self.log_base,
            "noise_model": self.noise_model.value,
            "effective_rows": self.effective_rows,
            "frobenius_sq": self.frobenius_sq,
            "bound_simple": risk_to_json(self.bound_simple),
            "bound_fano_closed": self.bound_fano_closed,
            "fano_vacuous": self.fano_vacuous,
            "beta_used": self.beta_used,
            "asymptotic_fano_bound": self.asymptotic_fano_bound,
            "worst_columns_bound": risk_to_json(self.worst_columns_bound),
            "worst_columns_support": list(self.worst_columns_support),
            "bruteforce_value": risk_to_json(self.bruteforce_value),
            "bruteforce_support": None if self.bruteforce_support is None else list(self.bruteforce_support),
            "best_lower_bound": risk_to_json(self.best_lower_bound),
            "reference_ds_rate": self.reference_ds_rate,
            "reference_oracle_rate": self.reference_oracle_rate,
            "certificate": cert,
        }


def _report_packing(n: int, k: int, options: ReportOptions) -> PackingSet:
    if options.packing is not None:
        if options.packing.n != n:
            raise PreconditionError(f"packing lives in R^{options.packing.n}, design has {n} columns")
        return options.packing
    size = options.packing_size or lemma_size(n, k)
    if size > AUTO_PACKING_CAP:
        raise PreconditionError(
            f"lemma-sized packing has {size} points; pass an explicit packing size up to {AUTO_PACKING_CAP}"
        )
    return build_packing(n, k, max(size, 2), options.packing_seed)


def full_report(
    a: DenseMatrix,
    k: int,
    sigma: float,
    noise_model: Union[NoiseKind, str] = NoiseKind.MEASUREMENT,
    options: Optional[ReportOptions] = None,
) -> BoundReport:
    """Every applicable lower bound for design ``a``.

    Under signal noise the design is whitened first, so all bounds are
    computed for V*. The Fano chain is reported only where the packing
    construction applies (k even, k < n/2); brute force only under the cap.
    An all-zero design reports unbounded risk.
    """
    options = options or ReportOptions()
    model = NoiseModel(noise_model, sigma)
    m, n = a.shape
    if not 1 <= k <= n:
        raise PreconditionError(f"k must satisfy 1 <= k <= n={n}, got {k}")

    design = a
    effective_rows = m
    if frobenius_norm_sq(a) == 0.0:
        effective_rows = 0
    elif model.kind is NoiseKind.SIGNAL:
        whitened = whiten_noise_folding(a, sigma)
        design, effective_rows = whitened.vstar, whitened.rank
        logger.info("whitened %dx%d design to %d effective rows", m, n, effective_rows)

    fro = frobenius_norm_sq(design)
    simple = bound_simple(design, k, sigma)
    worst = worst_columns_bound(design, k, sigma)

    fano_value: Optional[float] = None
    fano_vacuous: Optional[bool] = None
    asymptotic: Optional[float] = None
    lemma_ok = True
    try:
        check_lemma_preconditions(n, k)
    except PreconditionError as e:
        lemma_ok = False
        logger.debug("closed-form Fano bound skipped: %s", e)
    if fro > 0:
        if lemma_ok:
            closed = bound_fano_closed(fro, n, k, sigma, options.beta)
            fano_value, fano_vacuous = closed.value, closed.vacuous
        if k < n:
            asymptotic = asymptotic_fano_bound(fro, n, k, sigma)

    brute_value: Optional[float] = None
    brute_support: Optional[Tuple[int, ...]] = None
    if math.comb(n, k) <= options.cap:
        brute_value, brute_support = minimax_supports_bruteforce(design, k, sigma, options.cap)
    else:
        logger.info("skipping brute force: C(%d,%d) exceeds cap %d", n, k, options.cap)

    comparison: Optional[CertificateComparison] = None
    if options.packing is not None or options.certify:
        if not lemma_ok:
            raise PreconditionError(f"certificates need k even and k < n/2, got k={k}, n={n}")
        comparison = certificate_vs_closed_form(design, _report_packing(n, k, options), sigma)

    return BoundReport(
        n=n,
        m=m,
        k=k,
        sigma=sigma,
        noise_model=model.kind,
        effective_rows=effective_rows,
        frobenius_sq=fro,
        bound_simple=simple,
        bound_fano_closed=fano_value,
        fano_vacuous=fano_vacuous,
        beta_used=options.beta,
        asymptotic_fano_bound=asymptotic,
        worst_columns_bound=worst.value,
        worst_columns_support=worst.support,
        bruteforce_value=brute_value,
        bruteforce_support=brute_support,
        reference_ds_rate=dantzig_reference_rate(n, k, m, sigma, options.c0),
        reference_oracle_rate=averaging_oracle_risk(n, k, m, sigma, strict=False),
        certificate=comparison,
    )


def format_risk(value: Optional[float]) -> str:
    if value is None:
        return click.style("n/a", fg="white")
    if value == UNBOUNDED:
        return click.style("unbounded", fg="red", bold=True)
    return f"{value:.6g}"


def render_text(report: BoundReport) -> str:
    """Human-readable report with Click styling."""
    lines = [
        click.style("=" * 60, fg="blue"),
        click.style(f"Lower bounds: {report.m}x{report.n} design, k={report.k}, sigma={report.sigma:g}", bold=True),
        click.style("=" * 60, fg="blue"),
        f"Noise model:        {report.noise_model.value} (effective rows {report.effective_rows})",
        f"||A||_F^2:          {report.frobenius_sq:.6g}",
        f"Simple bound:       {format_risk(report.bound_simple)}",
        f"Worst columns:      {format_risk(report.worst_columns_bound)} on {list(report.worst_columns_support)}",
    ]
    if report.fano_vacuous:
        lines.append(f"Fano closed form:   {click.style('vacuous', fg='yellow')}")
    else:
        lines.append(f"Fano closed form:   {format_risk(report.bound_fano_closed)} (beta={report.beta_used:g})")
    lines.append(f"Asymptotic (1/128): {format_risk(report.asymptotic_fano_bound)}")
    support = "" if report.bruteforce_support is None else f" on {list(report.bruteforce_support)}"
    lines.append(f"Brute force:        {format_risk(report.bruteforce_value)}{support}")
    if report.certificate is not None:
        cert = report.certificate.certificate
        shown = click.style("vacuous", fg="yellow") if cert.vacuous else format_risk(cert.m_cert)
        lines.append(f"Fano certificate:   {shown} (|P|={cert.size})")
    lines += [
        "",
        f"Best lower bound:   {click.style(format_risk(report.best_lower_bound), fg='green', bold=True)}",
        f"l1 reference rate:  {report.reference_ds_rate:.6g}",
        f"Oracle rate:        {report.reference_oracle_rate:.6g}",
        f"Logarithms:         {report.log_base}",
    ]
    return "\n".join(lines)
