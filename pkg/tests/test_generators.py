"""
metricwalk Generator Tests

Run with: pytest tests/test_generators.py -v
"""

import numpy as np
import pytest


def _points(coords):
    from metricwalk.core.schemas import PointCloud

    return PointCloud(np.asarray(coords, dtype=np.float64))


# ============================================================================
# Gaussian Walk Oracles
# ============================================================================

class TestGaussianOracles:
    """Test the exact transition matrix and stationary law."""

    def test_transition_matrix_formula(self):
        """Rows are normalized Gaussian kernels, self term included."""
        from metricwalk.core.generators import exact_transition_matrix

        X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
        sigma = 1.5
        P = exact_transition_matrix(_points(X), sigma)
        sq = ((X[:, None, :] - X[None, :, :]) ** 2).sum(-1)
        K = np.exp(-sq / sigma**2)
        np.testing.assert_allclose(P, K / K.sum(axis=1, keepdims=True), rtol=1e-12)
        np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-15)

    def test_stationary_matches_normalizers(self):
        """Detailed balance: pi is proportional to Z_i."""
        from metricwalk.core.generators import (
            exact_transition_matrix, log_normalizers, sample_uniform_square, stationary_distribution,
        )

        points = sample_uniform_square(30, seed=1)
        P = exact_transition_matrix(points, 0.3)
        pi = stationary_distribution(P)
        z = np.exp(log_normalizers(points, 0.3))
        np.testing.assert_allclose(pi, z / z.sum(), rtol=1e-6)
        np.testing.assert_allclose(pi @ P, pi, atol=1e-10)

    def test_not_stochastic(self):
        from metricwalk.core.generators import NotStochasticError, stationary_distribution

        with pytest.raises(NotStochasticError):
            stationary_distribution(np.array([[0.5, 0.4], [0.5, 0.5]]))

    def test_reducible_chain(self):
        from metricwalk.core.generators import ReducibleChainError, stationary_distribution

        with pytest.raises(ReducibleChainError):
            stationary_distribution(np.eye(2))

    def test_non_finite_points(self):
        from metricwalk.core.generators import NonFiniteInputError, exact_transition_matrix

        with pytest.raises(NonFiniteInputError):
            exact_transition_matrix(_points([[0.0, 0.0], [np.nan, 1.0]]), 1.0)

    def test_uniform_square_is_seeded(self):
        from metricwalk.core.generators import sample_uniform_square

        a = sample_uniform_square(50, seed=7)
        b = sample_uniform_square(50, seed=7)
        np.testing.assert_array_equal(a.coords, b.coords)
        assert a.coords.min() >= 0.0 and a.coords.max() < 1.0


# ============================================================================
# Gaussian Walk Sampler
# ============================================================================

class TestGaussianWalk:
    """Test the sentence walk sampler."""

    def test_lengths_and_determinism(self):
        """Same seed, same sentences; the last sentence may be short."""
        from metricwalk.core.generators import GaussianWalkConfig, gaussian_walk, sample_uniform_square

        points = sample_uniform_square(20, seed=2)
        config = GaussianWalkConfig(sigma=0.3, steps=105, sentence_length=20)
        a = list(gaussian_walk(points, config, seed=11))
        b = list(gaussian_walk(points, config, seed=11))
        assert [len(s) for s in a] == [20, 20, 20, 20, 20, 5]
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_empirical_transitions_match_oracle(self):
        from metricwalk.core.generators import (
            GaussianWalkConfig, exact_transition_matrix, gaussian_walk,
        )

        points = _points([[0.0], [0.4], [0.9], [1.5], [1.6]])
        P = exact_transition_matrix(points, 0.6)
        config = GaussianWalkConfig(sigma=0.6, steps=200_000, sentence_length=1000)
        counts = np.zeros((5, 5))
        for sentence in gaussian_walk(points, config, seed=5):
            np.add.at(counts, (sentence[:-1], sentence[1:]), 1.0)
        freq = counts / counts.sum(axis=1, keepdims=True)
        np.testing.assert_allclose(freq, P, atol=0.02)

    @pytest.mark.slow
    def test_log_conditionals_converge_to_distances(self):
        """-log of counted conditionals approaches ||x_i - x_j||^2 / sigma^2 + log Z_i."""
        from metricwalk.core.cooccur import count_cooccurrences
        from metricwalk.core.generators import (
            GaussianWalkConfig, gaussian_walk, log_normalizers, sample_uniform_square,
        )
        from metricwalk.core.schemas import Vocabulary, Weighting

        sigma = 1.0
        points = sample_uniform_square(20, seed=0)
        X = points.coords
        target = ((X[:, None] - X[None]) ** 2).sum(-1) / sigma**2 + log_normalizers(points, sigma)[:, None]

        def max_error(steps):
            config = GaussianWalkConfig(sigma=sigma, steps=steps, sentence_length=10_000)
            counts = count_cooccurrences(
                gaussian_walk(points, config, seed=3), Vocabulary.from_ids(20), window=1, weighting=Weighting.RAW,
            )
            C = counts.matrix.toarray()
            assert np.all(C > 0)
            return float(np.max(np.abs(-np.log(C / C.sum(axis=1, keepdims=True)) - target)))

        short, long = max_error(10**5), max_error(10**7)
        assert long < short
        assert long <= 0.05

    def test_single_point(self):
        from metricwalk.core.generators import GaussianWalkConfig, gaussian_walk

        sentences = list(gaussian_walk(_points([[0.3, 0.3]]), GaussianWalkConfig(1.0, 7, 3), seed=0))
        assert [s.tolist() for s in sentences] == [[0, 0, 0], [0, 0, 0], [0]]

    def test_invalid_config(self):
        from metricwalk.core.generators import GaussianWalkConfig, gaussian_walk

        with pytest.raises(ValueError):
            list(gaussian_walk(_points([[0.0], [1.0]]), GaussianWalkConfig(sigma=0.0, steps=5), seed=0))


# ============================================================================
# Topic Walk
# ============================================================================

class TestTopicWalk:
    """Test the latent Langevin walk and its emissions."""

    def test_latent_path_targets_density(self):
        """A long path has roughly the density's mean and variance."""
        from metricwalk.core.generators import GaussianMixtureDensity, TopicModelConfig, topic_latent_path

        density = GaussianMixtureDensity(means=np.zeros((1, 2)), scales=1.0)
        config = TopicModelConfig(sigma=0.3, sigma_bar=1.0, alpha=np.ones(1), density=density)
        path = topic_latent_path(config, steps=50_000, seed=3)
        assert np.all(np.abs(path.mean(axis=0)) < 0.15)
        assert np.all(np.abs(path.var(axis=0) - 1.0) < 0.15)

    def test_mixture_gradient_matches_finite_differences(self):
        from metricwalk.core.generators import GaussianMixtureDensity

        density = GaussianMixtureDensity(
            means=np.array([[0.0, 0.0], [2.0, 1.0]]), scales=np.array([0.7, 1.2]), weights=np.array([1.0, 3.0])
        )
        x = np.array([[0.5, -0.3]])
        h = 1e-6
        numeric = np.array([
            (density.log_density(x + h * e) - density.log_density(x - h * e))[0] / (2 * h)
            for e in np.eye(2)
        ])
        np.testing.assert_allclose(density.grad_log_density(x)[0], numeric, rtol=1e-5)

    def test_flat_emissions_follow_alpha(self):
        """With a very wide emission kernel words appear in proportion to alpha."""
        from metricwalk.core.generators import GaussianMixtureDensity, TopicModelConfig, topic_walk

        points = _points([[0.0, 0.0], [0.1, 0.0]])
        density = GaussianMixtureDensity(means=np.zeros((1, 2)), scales=1.0)
        config = TopicModelConfig(sigma=0.1, sigma_bar=1e3, alpha=np.array([1.0, 3.0]), density=density)
        tokens = np.fromiter(topic_walk(points, config, steps=20_000, seed=4), dtype=np.int64)
        assert tokens.size == 20_000
        assert abs(np.mean(tokens == 1) - 0.75) < 0.02

    def test_deterministic(self):
        from metricwalk.core.generators import GaussianMixtureDensity, TopicModelConfig, topic_walk

        points = _points([[0.0, 0.0], [0.5, 0.5], [1.0, 0.0]])
        density = GaussianMixtureDensity(means=np.array([[0.5, 0.2]]), scales=0.5)
        config = TopicModelConfig(sigma=0.2, sigma_bar=0.5, alpha=np.ones(3), density=density)
        a = list(topic_walk(points, config, steps=500, seed=9))
        b = list(topic_walk(points, config, steps=500, seed=9))
        assert a == b

    def test_emission_underflow(self):
        """Far-away words with a narrow kernel underflow every weight."""
        from metricwalk.core.generators import (
            EmissionUnderflowError, GaussianMixtureDensity, TopicModelConfig, topic_walk,
        )

        points = _points([[1000.0, 1000.0], [1001.0, 1000.0]])
        density = GaussianMixtureDensity(means=np.zeros((1, 2)), scales=1.0)
        config = TopicModelConfig(sigma=0.1, sigma_bar=0.01, alpha=np.ones(2), density=density)
        with pytest.raises(EmissionUnderflowError):
            list(topic_walk(points, config, steps=10, seed=0))

    def test_alpha_shape_checked(self):
        from metricwalk.core.generators import GaussianMixtureDensity, TopicModelConfig, topic_walk

        density = GaussianMixtureDensity(means=np.zeros((1, 1)), scales=1.0)
        config = TopicModelConfig(sigma=0.1, sigma_bar=1.0, alpha=np.ones(3), density=density)
        with pytest.raises(ValueError):
            list(topic_walk(_points([[0.0], [1.0]]), config, steps=10, seed=0))
