import numpy as np
import pytest
from scipy import stats

from rkhs_dpp import build_model, conjugated_power_diagonal, sample, sample_many, symmetric
from rkhs_dpp.dpp import configurations, make_rng, model_from_matrices
from rkhs_dpp.oracle import enumerate_distribution

from conftest import random_explicit


def model_with_k(k):
    k = np.asarray(k, dtype=float)
    n = len(k)
    return model_from_matrices(tuple(range(n)), k @ np.linalg.inv(np.eye(n) - k), np.zeros((n, n)), k)


def chi2_pvalue(model, draws):
    dist = enumerate_distribution(model)
    configs = list(configurations(model.window))
    counts = dict.fromkeys(configs, 0)
    for s in draws:
        counts[s] += 1
    obs = np.array([counts[c] for c in configs], dtype=float)
    exp = np.array([dist[c] for c in configs]) * len(draws)
    return stats.chisquare(obs, exp * obs.sum() / exp.sum()).pvalue


class TestSampler:
    def test_deterministic(self):
        m = build_model(conjugated_power_diagonal(band=16), symmetric(3))
        assert sample_many(m, 50, 123) == sample_many(m, 50, 123)
        assert sample(m, 9) == sample_many(m, 1, 9)[0]
        assert sample_many(m, 50, 1) != sample_many(m, 50, 2)

    def test_chunking_does_not_change_stream(self):
        m = model_with_k(0.5 * np.eye(3))
        assert sample_many(m, 1000, 5, chunk=7) == sample_many(m, 1000, 5)

    def test_rng_is_philox(self):
        assert isinstance(make_rng(0).bit_generator, np.random.Philox)

    def test_uniform_three_sites(self):
        m = model_with_k(0.5 * np.eye(3))
        draws = sample_many(m, 100_000, 2024)
        n = len(draws)
        sigma = np.sqrt(n * (1 / 8) * (7 / 8))
        for c in configurations(m.window):
            assert abs(draws.count(c) - n / 8) <= 3 * sigma

    def test_vanishing_intensity(self):
        m = model_with_k(1e-9 * np.eye(4))
        assert all(s == () for s in sample_many(m, 1000, 0))

    def test_matches_enumeration_within_binomial_bounds(self):
        rng = np.random.default_rng(11)
        m = build_model(random_explicit(rng, 7, lo=-2), (0, 1, 2), 1)
        draws = sample_many(m, 100_000, 77)
        dist = enumerate_distribution(m)
        n = len(draws)
        for c in configurations(m.window):
            p = dist[c]
            assert abs(draws.count(c) - n * p) <= 3 * np.sqrt(n * p * (1 - p)) + 1

    @pytest.mark.parametrize("seed", range(3))
    def test_chi_square(self, seed):
        rng = np.random.default_rng(100 + seed)
        m = build_model(random_explicit(rng, 3, lo=0, scale=2.0), (0, 1, 2), 1)
        assert chi2_pvalue(m, sample_many(m, 20_000, seed)) > 0.001

    def test_larger_window_marginal_counts(self):
        m = build_model(conjugated_power_diagonal(band=16), symmetric(3))
        draws = sample_many(m, 40_000, 3)
        freq = np.array([[s in d for s in m.window] for d in draws]).mean(axis=0)
        np.testing.assert_allclose(freq, np.diag(m.k_matrix), atol=4 * 0.5 / np.sqrt(len(draws)))
