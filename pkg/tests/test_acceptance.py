"""
End-to-end experiments at desk scale. Run with ``pytest -m slow``.
"""

import math

import numpy as np
import pytest

from src.core.bounds import (
    asymptotic_fano_bound,
    bound_fano_closed,
    bound_simple,
    minimax_supports_bruteforce,
    oracle_support_risk,
    worst_columns_bound,
)
from src.core.estimators import OracleLeastSquares, averaging_design
from src.core.experiments import certificate_check, compare_table, loglog_slope
from src.core.fano import certificate
from src.core.linalg import DenseMatrix
from src.core.montecarlo import gaussian_design, mc_risk
from src.core.packing import (
    MIN_DIST_SQ,
    SparseVector,
    bernstein_empirical,
    build_packing,
    scatter_identity_check,
    verify_min_distance,
)
from src.core.recipes import CertifyParameters, CompareParameters
from src.core.report import ReportOptions, full_report

pytestmark = pytest.mark.slow


class TestOracleRates:
    """Monte Carlo against closed-form oracle risks."""

    def test_oracle_closed_form(self):
        a = gaussian_design(16, 32, seed=0)
        x = SparseVector(32, (0, 1, 2, 3), (1.0, -1.0, 0.5, 2.0))
        risk = mc_risk(a, OracleLeastSquares(), x, 1.0, trials=20_000, seed=0)
        exact = oracle_support_risk(a, x.support, 1.0)
        assert abs(risk.mean_risk - exact) <= 3 * risk.std_error

    def test_averaging_oracle(self):
        a = averaging_design(10, 2, 8, [2, 7])
        x = SparseVector(10, (2, 7), (1.0, -3.0))
        risk = mc_risk(a, OracleLeastSquares(), x, 1.0, trials=20_000, seed=0)
        assert abs(risk.mean_risk - 0.05) <= 3 * risk.std_error


class TestBoundOrdering:
    """Simple <= worst columns <= brute force on random square designs."""

    def test_hundred_matrices(self):
        rng = np.random.default_rng(2024)
        violations = 0
        for _ in range(100):
            a = DenseMatrix(rng.standard_normal((12, 12)))
            simple = bound_simple(a, 2, 1.0)
            worst = worst_columns_bound(a, 2, 1.0).value
            brute = minimax_supports_bruteforce(a, 2, 1.0).value
            if not (simple <= worst * (1 + 1e-12) and worst <= brute * (1 + 1e-12)):
                violations += 1
        assert violations == 0


class TestPackingConstruction:
    """Lemma-sized packings across seeds."""

    def test_fifty_seeds(self):
        for seed in range(50):
            packing = build_packing(64, 4, 16, seed=seed)
            assert verify_min_distance(packing) >= MIN_DIST_SQ
            assert scatter_identity_check(packing) <= 1e-10
            assert math.isfinite(packing.measured_beta)


class TestCertificate:
    """Operational meaning of the certificate on a Gaussian design."""

    @pytest.fixture(scope="class")
    def check(self):
        return certificate_check(CertifyParameters(m=32, n=64, k=4, sigma=1.0, trials=10_000, seed=0))

    def test_bayes_risk_exceeds_level(self, check):
        assert check.exceeds("oracle-ls")
        assert check.exceeds("lasso")

    def test_dominates_closed_form(self, check):
        assert check.comparison.lemma_sized
        assert check.comparison.dominates is True

    def test_dominates_over_seeds(self):
        for seed in range(10):
            a = gaussian_design(32, 64, seed=seed)
            packing = build_packing(64, 4, 16, seed=seed)
            report = full_report(a, 4, 1.0, options=ReportOptions(cap=1, packing=packing))
            assert report.certificate.dominates is True


class TestScaleCovariance:
    """Every lower bound scales as 1/c^2 under A -> cA."""

    @pytest.mark.parametrize("c", [0.5, 3.0, 10.0])
    def test_scaling(self, c):
        a = gaussian_design(12, 24, seed=1)
        packing = build_packing(24, 2, 16, seed=1)
        options = ReportOptions(packing=packing)
        base = full_report(a, 2, 1.0, options=options)
        scaled = full_report(a.scaled(c), 2, 1.0, options=options)
        for name in ("bound_simple", "worst_columns_bound", "bruteforce_value", "best_lower_bound",
                     "asymptotic_fano_bound"):
            assert getattr(scaled, name) == pytest.approx(getattr(base, name) / c**2, rel=1e-12)
        base_cert = certificate(a, packing, 1.0).m_cert
        assert base_cert > 0
        assert certificate(a.scaled(c), packing, 1.0).m_cert == pytest.approx(base_cert / c**2, rel=1e-12)


class TestAsymptoticConstant:
    """Explicit chain minus the 1/128 form is -2 sigma^2 / (32 ||A||_F^2)."""

    @pytest.mark.parametrize("n,k,fro,sigma", [(1024, 16, 300.0, 1.0), (4096, 32, 50.0, 0.3)])
    def test_difference(self, n, k, fro, sigma):
        closed = bound_fano_closed(fro, n, k, sigma, 0.0)
        assert not closed.vacuous
        diff = closed.value - asymptotic_fano_bound(fro, n, k, sigma)
        assert diff == pytest.approx(-2 * sigma**2 / (32 * fro), rel=1e-12)


class TestMatrixBernstein:
    """Analytic tail against empirical exceedance."""

    def test_tail_table(self):
        table = bernstein_empirical(16, 4, 64, 2000, seed=0, grid_points=5)
        assert len(table.rows) == 5
        for row in table.rows:
            assert row.analytic >= row.empirical - 3 * row.std_error
        assert table.draw_norm_violations == 0
        assert table.max_draw_norm <= 1.0
        assert table.max_z_mean_x_sq <= 4.0


class TestGap:
    """Lasso risk against the lower bound on N(0, 1/n) designs."""

    def test_gap_reproduction(self):
        params = CompareParameters(n=256, k=4, sigma=1.0, m_values=(40, 60, 80), trials=500, signals=3, seed=0)
        table = compare_table(params)
        assert (table["lasso_risk"] > table["lower_bound"]).all()
        ratio = table["lasso_risk"] / (4 * math.log(256) / table["m"])
        assert ((ratio >= 1.0) & (ratio <= 50.0)).all()
        slope = loglog_slope(table["m"].tolist(), table["lasso_risk"].tolist())
        assert -1.3 <= slope <= -0.7
