"""
Test suite for rank correlations, level-set boundaries, Hausdorff distances
and the empirical diagonal
"""
import numpy as np
import pytest
from scipy import stats

from estimators.copula_functionals import (
    _concordance_balance,
    _concordance_balance_fast,
    densify,
    empirical_diagonal,
    estimate_level_boundary,
    hausdorff_bruteforce,
    hausdorff_distance,
    point_segment_distances,
    sample_rho_s,
    sample_tau,
)
from estimators.copula_models import EmpiricalCopula, clayton_level_boundary, sample_copula
from models.schemas import CopulaSpec
from utils.errors import ArgumentError, DomainError, UndefinedCorrelationError

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]])


class TestRankCorrelations:
    """Kendall's tau-a and Spearman's rho"""

    def test_tau_small_example(self):
        data = np.array([[1.0, 1.0], [2.0, 3.0], [3.0, 2.0], [4.0, 4.0]])
        # 5 concordant and 1 discordant pair out of 6
        assert sample_tau(data) == pytest.approx(4 / 6)

    def test_tau_ties_count_as_neither(self):
        data = np.array([[1.0, 1.0], [1.0, 2.0], [2.0, 3.0]])
        assert sample_tau(data) == pytest.approx(2 / 3)

    def test_tau_matches_scipy_without_ties(self, clayton_sample):
        expected = stats.kendalltau(clayton_sample[:, 0], clayton_sample[:, 1])[0]
        assert sample_tau(clayton_sample) == pytest.approx(expected, abs=1e-12)

    def test_fast_balance_with_ties(self, stream):
        rng = stream(60)
        x = rng.integers(0, 15, 400).astype(float)
        y = x + rng.integers(0, 10, 400)
        assert _concordance_balance_fast(x, y) == _concordance_balance(x, y)

    def test_fast_path_equals_direct_count(self, stream):
        data = sample_copula(CopulaSpec.parse("gumbel:2"), 6000, stream(61))
        n = data.shape[0]
        direct = _concordance_balance(data[:, 0], data[:, 1]) / (n * (n - 1) / 2)
        assert sample_tau(data) == pytest.approx(direct, abs=1e-12)

    def test_rho_s_monotone_invariance(self, clayton_sample):
        transformed = np.column_stack([np.exp(clayton_sample[:, 0]), clayton_sample[:, 1] ** 3])
        assert sample_rho_s(transformed) == pytest.approx(sample_rho_s(clayton_sample))

    def test_four_point_example(self):
        data = np.array([[1.0, 2.0], [2.0, 1.0], [3.0, 4.0], [4.0, 3.0]])
        # rank differences are +-1 everywhere, so rho_S = 1 - 6 * 4 / 60
        assert sample_rho_s(data) == pytest.approx(0.6)
        assert sample_tau(data) == pytest.approx(1 / 3)

    def test_tau_monotone_invariance(self, clayton_sample):
        transformed = np.column_stack([np.log(clayton_sample[:, 0]), np.tan(clayton_sample[:, 1] - 0.5)])
        assert sample_tau(transformed) == sample_tau(clayton_sample)

    @pytest.mark.parametrize("name", ["clayton:2", "gumbel:3", "clayton:-0.5", "gaussian:0.5", "indep"])
    def test_tau_rho_inequality(self, name, stream):
        for n in (5, 30, 300):
            data = sample_copula(CopulaSpec.parse(name), n, stream(65, n))
            assert abs(3 * sample_tau(data) - 2 * sample_rho_s(data)) <= 1 + 1e-12

    def test_rho_s_matches_scipy(self, clayton_sample):
        expected = stats.spearmanr(clayton_sample[:, 0], clayton_sample[:, 1])[0]
        assert sample_rho_s(clayton_sample) == pytest.approx(expected, abs=1e-12)

    def test_constant_column(self):
        data = np.column_stack([np.ones(5), np.arange(5.0)])
        with pytest.raises(UndefinedCorrelationError):
            sample_rho_s(data)

    @pytest.mark.parametrize("data", [np.zeros((1, 2)), np.zeros((5, 3)), np.zeros(5)])
    def test_bad_shapes(self, data):
        with pytest.raises(ArgumentError):
            sample_tau(data)


class TestHausdorff:
    """Distances between polygonal chains"""

    def test_shifted_square(self):
        assert hausdorff_distance(UNIT_SQUARE, UNIT_SQUARE + [0.1, 0.0]) == pytest.approx(0.1, abs=1e-12)

    def test_single_vertex_chain(self):
        line = np.array([[0.0, 0.0], [1.0, 0.0]])
        midpoint = np.array([[0.5, 0.0]])
        assert hausdorff_bruteforce(midpoint, line) == pytest.approx(0.5)
        assert point_segment_distances(midpoint, line[:1], line[1:])[0, 0] == 0.0

    def test_matches_bruteforce(self, stream):
        rng = stream(62)
        for _ in range(100):
            a, b = rng.random((20, 2)), rng.random((20, 2))
            assert hausdorff_distance(a, b, rng=rng) == pytest.approx(hausdorff_bruteforce(a, b), abs=1e-12)

    def test_metric_properties(self, stream):
        rng = stream(63)
        for _ in range(20):
            a, b, c = rng.random((12, 2)), rng.random((15, 2)), rng.random((9, 2))
            ab, ba = hausdorff_distance(a, b), hausdorff_distance(b, a)
            assert ab == pytest.approx(ba, abs=1e-12)
            assert hausdorff_distance(a, a) == pytest.approx(0.0, abs=1e-15)
            assert hausdorff_distance(a, c) <= ab + hausdorff_distance(b, c) + 1e-12

    def test_segment_interiors_count(self):
        a = np.array([[0.0, 1.0], [0.5, 0.5], [1.0, 1.0]])
        b = np.array([[0.0, 1.0], [1.0, 1.0], [0.5, 0.5]])
        # same vertices, but the chord (0, 1)-(1, 1) of b stays away from a
        assert hausdorff_distance(a, b) == pytest.approx(np.sqrt(2) / 4, abs=1e-12)
        assert hausdorff_bruteforce(a, b) == pytest.approx(np.sqrt(2) / 4, abs=1e-12)

    def test_zero_only_for_equal_point_sets(self):
        line = np.array([[0.0, 0.0], [1.0, 0.0]])
        refined = np.array([[0.0, 0.0], [0.25, 0.0], [0.6, 0.0], [1.0, 0.0]])
        assert hausdorff_distance(line, refined) == pytest.approx(0.0, abs=1e-15)
        assert hausdorff_distance(line, refined[::-1]) == pytest.approx(0.0, abs=1e-15)
        half = np.array([[0.0, 0.0], [0.5, 0.0]])
        assert hausdorff_distance(line, half) == pytest.approx(0.5, abs=1e-12)

    def test_polygon_chain_input(self):
        chain = clayton_level_boundary(2.0, 0.3, n_pts=20)
        assert hausdorff_distance(chain, chain.array) == pytest.approx(0.0, abs=1e-15)

    def test_densify(self):
        vertices = np.array([[0.0, 0.0], [1.0, 0.0]])
        dense = densify(vertices, 0.1)
        assert len(dense) == 11
        assert np.max(np.linalg.norm(np.diff(dense, axis=0), axis=1)) <= 0.1 + 1e-12
        assert hausdorff_distance(vertices, vertices + [0.0, 0.2], spacing=0.05) == pytest.approx(0.2)
        with pytest.raises(ArgumentError):
            densify(vertices, 0.0)

    def test_empty_chain(self):
        with pytest.raises(ArgumentError):
            hausdorff_distance(np.empty((0, 2)), UNIT_SQUARE)


class TestLevelBoundary:
    """Contours of the empirical copula"""

    def test_chain_shape(self, clayton_sample):
        chain = estimate_level_boundary(clayton_sample, 0.3)
        vertices = chain.array
        np.testing.assert_array_equal(vertices[0], [0.3, 1.0])
        np.testing.assert_array_equal(vertices[-1], [1.0, 0.3])
        assert np.all(vertices >= 0.3)
        ec = EmpiricalCopula.from_data(clayton_sample)
        assert np.max(np.abs(ec.evaluate(vertices[1:-1]) - 0.3)) < 0.05

    def test_close_to_true_boundary(self, stream):
        data = sample_copula(CopulaSpec.parse("clayton:2"), 2000, stream(64))
        estimate = estimate_level_boundary(data, 0.3, grid_n=150)
        truth = clayton_level_boundary(2.0, 0.3)
        assert hausdorff_distance(estimate, truth) < 0.1

    def test_invalid_inputs(self, clayton_sample):
        with pytest.raises(DomainError):
            estimate_level_boundary(clayton_sample, 1.0)
        with pytest.raises(ArgumentError):
            estimate_level_boundary(np.column_stack([clayton_sample, clayton_sample[:, 0]]), 0.3)


class TestEmpiricalDiagonal:
    """C_n(u, ..., u) on a grid"""

    def test_bounds(self, clayton_sample):
        grid = np.linspace(0.05, 0.95, 19)
        curve = empirical_diagonal(clayton_sample, grid)
        values = np.asarray(curve.values)
        assert curve.u_grid == grid.tolist()
        assert np.all(values <= grid + 1 / 200 + 1e-12)
        assert np.all(values >= np.maximum(2 * grid - 1, 0) - 1 / 100)

    def test_counts(self):
        data = np.array([[0.1, 0.2], [0.3, 0.9], [0.6, 0.5]])
        # pseudo-observation row maxima are 0.25, 0.75 and 0.75
        curve = empirical_diagonal(data, [0.2, 0.5, 0.8])
        np.testing.assert_allclose(curve.values, [0.0, 1 / 3, 1.0])

    def test_needs_two_columns(self):
        with pytest.raises(ArgumentError):
            empirical_diagonal(np.array([[0.1], [0.5]]), [0.5])
