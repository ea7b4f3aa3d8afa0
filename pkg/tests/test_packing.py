import json
import math

import numpy as np
import pytest
from scipy import stats

from src.core import packing as packing_module
from src.core.errors import DomainError, InconsistencyError, InputError, PackingExhaustedError, PreconditionError
from src.core.linalg import DenseMatrix, operator_norm_sym
from src.core.packing import (
    MIN_DIST_SQ,
    PackingSet,
    SparseVector,
    assemble_packing,
    bernstein_empirical,
    bernstein_tail,
    beta_min,
    build_packing,
    empirical_moments,
    lemma_size,
    p1_bound,
    p1_comparison,
    p2_bound,
    rank_one_deviation_norm,
    scatter_identity_check,
    squared_distance,
    universe_points,
    universe_sample,
    verify_min_distance,
)


class TestSparseVector:
    """Sparse point storage."""

    def test_dense_round_trip(self):
        x = SparseVector.from_dense([0.0, 1.5, 0.0, -2.0])
        assert x.support == (1, 3)
        assert np.array_equal(x.to_dense(), [0.0, 1.5, 0.0, -2.0])

    def test_rejects_unsorted_support(self):
        with pytest.raises(InputError):
            SparseVector(5, (3, 1), (1.0, 1.0))

    def test_rejects_out_of_range(self):
        with pytest.raises(InputError):
            SparseVector(3, (0, 3), (1.0, 1.0))

    def test_squared_distance_merges_supports(self):
        a = SparseVector(6, (0, 2), (1.0, 1.0))
        b = SparseVector(6, (2, 5), (-1.0, 3.0))
        assert squared_distance(a, b) == pytest.approx(1 + 4 + 9)


class TestUniverse:
    """Universe sampling, enumeration and the lemma size."""

    def test_sample_is_unit_norm_k_sparse(self, rng):
        for _ in range(20):
            x = universe_sample(64, 4, rng)
            assert x.sparsity == 4
            assert all(abs(abs(v) - 0.5) < 1e-15 for v in x.values)
            assert x.sq_norm == pytest.approx(1.0)

    def test_enumeration_size(self):
        assert len(universe_points(4, 2)) == 24
        assert len(universe_points(6, 2)) == math.comb(6, 2) * 4

    def test_enumeration_cap(self):
        with pytest.raises(PreconditionError):
            universe_points(64, 4)

    @pytest.mark.parametrize("n,k", [(4, 3), (4, 0), (2, 4)])
    def test_universe_parameters(self, n, k, rng):
        with pytest.raises(PreconditionError):
            universe_sample(n, k, rng)
        with pytest.raises(PreconditionError):
            universe_points(n, k)

    def test_tiny_universe_sampling_is_uniform(self, rng):
        index = {(p.support, p.values): i for i, p in enumerate(universe_points(4, 2))}
        draws = [index[(x.support, x.values)] for x in (universe_sample(4, 2, rng) for _ in range(100_000))]
        counts = np.bincount(draws, minlength=24)
        assert counts.size == 24
        assert stats.chisquare(counts).pvalue > 1e-3

        pairs = np.asarray(draws).reshape(-1, 2)
        repeat = float(np.mean(pairs[:, 0] == pairs[:, 1]))
        se = math.sqrt((1 / 24) * (23 / 24) / len(pairs))
        assert abs(repeat - 1 / 24) < 4 * se

    def test_full_tiny_universe_second_moment(self):
        packing = assemble_packing(4, 2, universe_points(4, 2))
        moments = empirical_moments(packing)
        assert np.allclose(moments.mu, 0.0, atol=1e-15)
        assert np.allclose(moments.q, np.eye(4) / 4, atol=1e-15)
        assert moments.beta_measured < 1e-12
        assert packing.measured_beta < 1e-12
        assert packing.measured_min_dist_sq >= MIN_DIST_SQ

    def test_full_universe_second_moment(self):
        packing = assemble_packing(6, 2, universe_points(6, 2))
        moments = empirical_moments(packing)
        assert np.allclose(moments.mu, 0.0, atol=1e-15)
        assert np.allclose(moments.q, np.eye(6) / 6, atol=1e-15)
        assert moments.beta_measured < 1e-12

    @pytest.mark.parametrize("n,k,expected", [(64, 4, 16), (1024, 4, 256), (10, 4, 3), (32, 8, 16), (100, 4, 25)])
    def test_lemma_size(self, n, k, expected):
        assert lemma_size(n, k) == expected

    @pytest.mark.parametrize("n,k", [(64, 3), (8, 4)])
    def test_lemma_preconditions(self, n, k):
        with pytest.raises(PreconditionError):
            lemma_size(n, k)


class TestBuildPacking:
    """Rejection-with-redraw construction."""

    def test_lemma_sized_packing(self):
        packing = build_packing(64, 4, 16, seed=3)
        assert packing.size == 16
        assert packing.scale == 1.0
        assert verify_min_distance(packing) >= MIN_DIST_SQ - 1e-12
        assert packing.measured_min_dist_sq == verify_min_distance(packing)

    def test_same_seed_same_points(self):
        assert build_packing(64, 4, 16, seed=9).to_json() == build_packing(64, 4, 16, seed=9).to_json()

    def test_beta_shrinks_as_size_doubles(self):
        sizes = [16, 32, 64, 128, 256]
        betas = [np.mean([build_packing(64, 4, size, seed=s).measured_beta for s in range(5)]) for size in sizes]
        assert all(b < a for a, b in zip(betas, betas[1:]))

    def test_different_seeds_differ(self):
        assert build_packing(64, 4, 16, seed=1).points != build_packing(64, 4, 16, seed=2).points

    def test_exhausted_budget(self):
        with pytest.raises(PackingExhaustedError):
            build_packing(10, 4, 2000, seed=0, max_attempts=10)

    def test_size_must_be_at_least_two(self):
        with pytest.raises(PreconditionError):
            build_packing(64, 4, 1, seed=0)

    def test_scatter_identity(self):
        assert scatter_identity_check(build_packing(32, 4, 20, seed=5)) <= 1e-10

    def test_antipodal_pair_has_zero_mean(self):
        x = universe_sample(16, 2, np.random.default_rng(0))
        packing = assemble_packing(16, 2, [x, x.scaled(-1.0)])
        moments = empirical_moments(packing)
        assert np.allclose(moments.mu, 0.0)
        assert packing.measured_min_dist_sq == pytest.approx(4.0)


class TestPackingSet:
    """Scaling and serialization."""

    def test_scaled_updates_distances(self):
        packing = build_packing(32, 4, 8, seed=0)
        scaled = packing.scaled(3.0)
        assert scaled.scale == 3.0
        assert scaled.measured_min_dist_sq == pytest.approx(9 * packing.measured_min_dist_sq)
        assert scaled.points[0].sq_norm == pytest.approx(9.0)

    def test_json_round_trip(self):
        packing = build_packing(32, 4, 8, seed=4)
        restored = PackingSet.from_dict(json.loads(packing.to_json()))
        assert restored.points == packing.points
        assert restored.seed == 4
        assert restored.measured_beta == packing.measured_beta

    def test_from_dict_rejects_garbage(self):
        with pytest.raises(InputError):
            PackingSet.from_dict({"n": 4})

    def test_rejects_points_denser_than_k(self):
        x = SparseVector(8, (0, 1, 2), (1.0, 1.0, 1.0))
        with pytest.raises(InputError):
            PackingSet(8, 2, (x,), 1.0, math.inf, 0.0)


class TestProbabilityBounds:
    """Closed-form probabilities behind the existence argument."""

    def test_p1_small_at_lemma_size(self):
        assert 0 < p1_bound(1024, 8, lemma_size(1024, 8)) < 0.5

    def test_p1_comparison_chain(self):
        cmp = p1_comparison(64, 4)
        assert cmp.three_quarter_side <= cmp.half_shift_side
        assert cmp.binomial_ratio == pytest.approx(math.comb(64, 4) / math.comb(64, 2))

    def test_p2_at_beta_min_is_one_half(self):
        assert p2_bound(64, 100, beta_min(64, 100)) == pytest.approx(0.5, rel=1e-12)

    def test_p2_rejects_non_positive_beta(self):
        with pytest.raises(PreconditionError):
            p2_bound(64, 100, 0.0)

    def test_bernstein_tail_domain(self):
        assert bernstein_tail(16, 2.0, 0.0) == 32.0
        with pytest.raises(DomainError):
            bernstein_tail(16, 2.0, 4.5)
        with pytest.raises(DomainError):
            bernstein_tail(16, 2.0, -0.1)


class TestBernstein:
    """Rank-one deviations and the empirical Bernstein table."""

    def test_rank_one_norm_matches_eigensolver(self, rng):
        x = universe_sample(16, 4, rng)
        dense = x.to_dense()
        direct = operator_norm_sym(DenseMatrix(np.outer(dense, dense) - np.eye(16) / 16))
        assert rank_one_deviation_norm(x) == pytest.approx(direct, abs=1e-12)
        assert rank_one_deviation_norm(x) == pytest.approx(15 / 16)

    def test_draw_norms_are_measured(self):
        table = bernstein_empirical(8, 2, 8, 20, seed=1, grid_points=2)
        assert table.draws == 160
        assert table.max_draw_norm == pytest.approx(7 / 8, abs=1e-12)
        assert table.draw_norm_violations == 0

    def test_draw_norm_disagreement_is_reported(self, monkeypatch):
        monkeypatch.setattr(packing_module, "rank_one_deviation_norm", lambda x: 0.5)
        with pytest.raises(InconsistencyError):
            bernstein_empirical(8, 2, 4, 2, seed=0, grid_points=1)

    def test_small_table(self):
        table = bernstein_empirical(8, 2, 8, 50, seed=1, grid_points=4)
        assert len(table.rows) == 4
        assert table.rows[-1].t == pytest.approx(2 * table.rho_sq)
        assert table.draw_norm_violations == 0
        assert table.max_draw_norm <= 1.0
        assert all(0.0 <= row.empirical <= 1.0 for row in table.rows)
        assert set(table.to_dict()) >= {"rows", "rho_sq", "max_z_mean_x_sq"}

    def test_desk_scale_limits(self):
        with pytest.raises(PreconditionError):
            bernstein_empirical(128, 4, 8, 10, seed=0)
