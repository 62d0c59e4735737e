"""
metricwalk Evaluation Tests

Run with: pytest tests/test_evaluate.py -v
"""

import numpy as np
import pytest
from pathlib import Path

FIXTURES = Path(__file__).parent / "fixtures"


def _synthetic_vectors():
    """
    Words built from shared basis directions so every fixture answer is the
    exact ideal point under both cosine and L2.
    """
    from metricwalk.core.schemas import WordVectors

    dims = 17
    e = np.eye(dims)
    (greece_e, france_e, child_e, sib_e, royal_e, unc_e,
     city_r, country_r, male_r, female_r, a, b, c,
     col, x, y, z) = e
    words = {
        "athens": greece_e + city_r, "greece": greece_e + country_r,
        "paris": france_e + city_r, "france": france_e + country_r,
        "boy": child_e + male_r, "girl": child_e + female_r,
        "brother": sib_e + male_r, "sister": sib_e + female_r,
        "king": royal_e + male_r, "queen": royal_e + female_r,
        "uncle": unc_e + male_r, "aunt": unc_e + female_r,
        "one": a, "two": (a + b) / np.sqrt(2), "three": b,
        "four": b + (b - a) / 3, "nine": c, "zero": -a,
        "red": col + x, "blue": col + y, "green": col + z,
        "yellow": col + (x + y + z) / 3, "dog": greece_e, "car": c + z,
    }
    return WordVectors(words=tuple(words), vectors=np.stack(list(words.values())))


def _random_vectors(seed=11, dims=6):
    """Gaussian vectors for every fixture word; no exact ties."""
    from metricwalk.core.schemas import WordVectors

    words = _synthetic_vectors().words + (
        "mason", "stone", "teacher", "chalk", "carpenter", "wood",
        "soldier", "gun", "photograph", "camera", "book", "word",
    )
    rng = np.random.default_rng(seed)
    return WordVectors(words=words, vectors=rng.standard_normal((len(words), dims)))


def _mixed_items():
    from metricwalk.core.io import read_google, read_sat, read_tsv_tasks

    return (
        read_google(FIXTURES / "analogies.txt")
        + read_tsv_tasks(FIXTURES / "tasks.tsv")
        + read_sat(FIXTURES / "sat.txt")
    )


# ============================================================================
# Ideal Points and Ranking
# ============================================================================

class TestIdealPoints:
    """Test the per-kind target constructions."""

    def test_formulas(self):
        from metricwalk.core.evaluate import ideal_point
        from metricwalk.core.schemas import EvalItem, ItemKind, WordVectors

        vecs = WordVectors(
            words=("p", "q", "r", "s"),
            vectors=np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 3.0], [5.0, 5.0]]),
        )
        analogy = EvalItem(kind=ItemKind.ANALOGY, query=("p", "q", "r"), answer="s")
        np.testing.assert_allclose(ideal_point(analogy, vecs), [3.0, 3.0])
        cls = EvalItem(kind=ItemKind.CLASSIFICATION, query=("p", "q", "r"), answer="s", choices=("s",))
        np.testing.assert_allclose(ideal_point(cls, vecs), [1.0, 1.0])

    def test_sequence_extrapolation(self):
        from metricwalk.core.evaluate import ideal_point
        from metricwalk.core.schemas import EvalItem, ItemKind, WordVectors

        vecs = WordVectors(words=("w0", "w1", "w2", "w3"), vectors=np.array([[0.0], [1.0], [2.0], [3.0]]))
        item = EvalItem(kind=ItemKind.SEQUENCE, query=("w0", "w1", "w2"), answer="w3")
        np.testing.assert_allclose(ideal_point(item, vecs), [8.0 / 3.0])

    def test_missing_word(self):
        from metricwalk.core.evaluate import ideal_point
        from metricwalk.core.schemas import EvalItem, ItemKind

        item = EvalItem(kind=ItemKind.ANALOGY, query=("athens", "greece", "rome"), answer="italy")
        assert ideal_point(item, _synthetic_vectors()) is None


class TestRanking:
    """Test candidate ranking."""

    def test_ties_go_to_smaller_id(self):
        from metricwalk.core.evaluate import rank_candidates

        cands = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
        assert rank_candidates(np.array([0.0, 2.0]), cands, "cosine") == [1, 2, 0]
        assert rank_candidates(np.array([0.0, 2.0]), cands, "l2") == [1, 2, 0]

    def test_exclusions_and_ids(self):
        from metricwalk.core.evaluate import rank_candidates

        cands = np.array([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0]])
        ranked = rank_candidates(np.array([1.0, 0.0]), cands, "cosine", exclusions=[10], ids=[10, 11, 12])
        assert ranked == [11, 12]

    def test_zero_norm_candidates_skipped(self, caplog):
        from metricwalk.core.evaluate import rank_candidates

        cands = np.array([[0.0, 0.0], [1.0, 1.0]])
        with caplog.at_level("WARNING", logger="metricwalk.evaluate"):
            assert rank_candidates(np.array([1.0, 0.0]), cands, "cosine") == [1]
        assert "zero-norm" in caplog.text
        assert rank_candidates(np.array([1.0, 0.0]), cands, "l2") == [0, 1]


# ============================================================================
# Task Evaluation
# ============================================================================

class TestEvaluateTask:
    """Test accuracy and coverage bookkeeping."""

    @pytest.mark.parametrize("metric", ["cosine", "l2"])
    def test_exact_optimum_scores_perfectly(self, metric):
        from metricwalk.core.evaluate import evaluate_task
        from metricwalk.core.io import read_google, read_tsv_tasks

        items = read_google(FIXTURES / "analogies.txt") + read_tsv_tasks(FIXTURES / "tasks.tsv")
        report = evaluate_task(items, _synthetic_vectors(), metric)
        assert report.accuracy == 1.0
        assert report.total == 8
        assert report.covered == 7
        assert report.sections["cls"].covered == 1
        assert report.sections["cls"].total == 2
        assert report.sections["family"].covered == 2

    def test_query_exclusion(self):
        """Without exclusion a degenerate analogy returns its own query word."""
        from metricwalk.core.evaluate import evaluate_task
        from metricwalk.core.schemas import EvalItem, ItemKind, WordVectors

        vecs = WordVectors(
            words=("man", "woman", "king", "queen", "apple"),
            vectors=np.array([[1.0, 0, 0], [1, 1, 0], [1, 0, 1], [1, 1, 1], [0, 0, -1]]),
        )
        item = EvalItem(kind=ItemKind.ANALOGY, query=("man", "man", "king"), answer="queen")
        assert evaluate_task([item], vecs, "cosine", exclude_query=False).accuracy == 0.0
        assert evaluate_task([item], vecs, "cosine", exclude_query=True).accuracy == 1.0

    def test_answer_vocabulary_limit(self):
        """Answers outside the top words can never be returned."""
        from metricwalk.core.evaluate import evaluate_task
        from metricwalk.core.io import read_google

        items = read_google(FIXTURES / "analogies.txt")
        report = evaluate_task(items, _synthetic_vectors(), "cosine", answer_vocab_limit=4)
        # greece and france sit among the first four words, sister and aunt do not
        assert report.sections["capital-common-countries"].accuracy == 1.0
        assert report.sections["family"].accuracy == 0.0

    def test_top_k(self):
        from metricwalk.core.evaluate import evaluate_task
        from metricwalk.core.io import read_google

        items = read_google(FIXTURES / "analogies.txt")
        report = evaluate_task(items, _synthetic_vectors(), "l2", top_k=3)
        assert report.k == 3
        assert report.top_k_accuracy == 1.0
        assert evaluate_task(items, _synthetic_vectors(), "l2").top_k_accuracy is None

    def test_sat_pairs(self):
        """Both fixture blocks share a question; only one answer can win."""
        from metricwalk.core.evaluate import evaluate_task
        from metricwalk.core.io import read_sat
        from metricwalk.core.schemas import WordVectors

        vecs = {
            "mason": [0, 0], "stone": [0, 1], "teacher": [0, 0], "chalk": [1, 0],
            "carpenter": [1, 1], "wood": [1, 2], "soldier": [2, 0], "gun": [2, -1],
            "photograph": [3, 3], "camera": [4, 4], "book": [0, 2], "word": [1, 3],
        }
        vectors = WordVectors(words=tuple(vecs), vectors=np.array(list(vecs.values()), dtype=float))
        items = read_sat(FIXTURES / "sat.txt")
        for metric in ("cosine", "l2"):
            report = evaluate_task(items, vectors, metric)
            assert report.accuracy == 0.5
            assert report.covered == 2

    @pytest.mark.parametrize("metric", ["cosine", "l2"])
    def test_item_order_does_not_matter(self, metric):
        from metricwalk.core.evaluate import evaluate_task

        items, vectors = _mixed_items(), _random_vectors()
        forward = evaluate_task(items, vectors, metric, top_k=3)
        backward = evaluate_task(items[::-1], vectors, metric, top_k=3)
        assert backward.to_dict() == forward.to_dict()
        assert 0 < forward.covered <= forward.total

    @pytest.mark.parametrize("metric", ["cosine", "l2"])
    def test_common_rigid_transform(self, metric):
        """Cosine sees through rotations; L2 also through translations."""
        from metricwalk.core.evaluate import evaluate_task
        from metricwalk.core.schemas import WordVectors

        items, vectors = _mixed_items(), _random_vectors()
        rng = np.random.default_rng(12)
        Q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        moved = vectors.vectors @ Q
        if metric == "l2":
            moved = moved + rng.normal(size=6)
        transformed = WordVectors(words=vectors.words, vectors=moved)
        base = evaluate_task(items, vectors, metric, top_k=3)
        assert evaluate_task(items, transformed, metric, top_k=3).to_dict() == base.to_dict()

    def test_nothing_covered(self, caplog):
        from metricwalk.core.evaluate import evaluate_task
        from metricwalk.core.schemas import EvalItem, ItemKind

        item = EvalItem(kind=ItemKind.ANALOGY, query=("x1", "x2", "x3"), answer="x4")
        report = evaluate_task([item], _synthetic_vectors())
        assert report.accuracy == 0.0
        assert report.undefined
        assert report.to_dict()["undefined"] is True


# ============================================================================
# Manifold Quality
# ============================================================================

class TestPurity:
    """Test kNN label purity."""

    def test_uneven_line(self):
        from metricwalk.core.evaluate import knn_purity

        X = np.array([0.0, 1.0, 2.5, 3.0, 5.0, 6.0])[:, None]
        labels = np.array([0, 0, 0, 1, 1, 1])
        assert knn_purity(X, labels, k=1) == pytest.approx(4 / 6)

    def test_separated_clusters(self):
        from metricwalk.core.evaluate import knn_purity

        rng = np.random.default_rng(0)
        X = np.vstack([rng.normal(0, 0.1, (20, 2)), rng.normal(10, 0.1, (20, 2))])
        labels = np.repeat([0, 1], 20)
        assert knn_purity(X, labels, k=5) == 1.0

    def test_k_bounds(self):
        from metricwalk.core.evaluate import knn_purity

        with pytest.raises(ValueError):
            knn_purity(np.zeros((3, 2)), np.zeros(3), k=3)


# ============================================================================
# Log-conditional Diagnostic
# ============================================================================

def _exact_conditionals(n=20, t=2.0, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.random((n, 2))
    D = ((X[:, None, :] - X[None, :, :]) ** 2).sum(-1)
    logP = -D / t + rng.normal(size=n)[:, None] + rng.normal(size=n)[None, :]
    P = np.exp(logP)
    return P / P.sum(axis=1, keepdims=True), D


class TestVaradhan:
    """Test the log-conditional vs squared distance regression."""

    def test_exact_model(self):
        from metricwalk.core.evaluate import varadhan_diagnostic

        P, D = _exact_conditionals(t=2.0)
        fit = varadhan_diagnostic(P, D, t_hat=2.0)
        assert fit.slope == pytest.approx(1.0, rel=1e-6)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-10)
        assert fit.included == 20 * 19
        assert abs(fit.row_intercepts.sum()) < 1e-6

    def test_sparse_and_counts_inputs(self):
        import scipy.sparse as sp
        from metricwalk.core.cooccur import counts_from_matrix
        from metricwalk.core.evaluate import varadhan_diagnostic

        P, D = _exact_conditionals(t=1.0)
        dense = varadhan_diagnostic(P, D)
        sparse = varadhan_diagnostic(sp.csr_matrix(P), D)
        counts = varadhan_diagnostic(counts_from_matrix(1000.0 * P), D)
        assert sparse.slope == pytest.approx(dense.slope)
        assert counts.slope == pytest.approx(dense.slope)

    def test_zero_cells_are_excluded(self, caplog):
        from metricwalk.core.evaluate import varadhan_diagnostic

        P, D = _exact_conditionals()
        P[0, 1] = P[3, 2] = 0.0
        with caplog.at_level("WARNING", logger="metricwalk.evaluate"):
            fit = varadhan_diagnostic(P, D, t_hat=2.0)
        assert fit.excluded_zero == 2
        assert fit.included == 20 * 19 - 2
        assert "excluded 2 zero cells" in caplog.text

    def test_permuted_distances_explain_little(self):
        from metricwalk.core.evaluate import varadhan_diagnostic

        P, D = _exact_conditionals(n=60, seed=1)
        perm = np.random.default_rng(2).permutation(60)
        null = varadhan_diagnostic(P, D[perm], t_hat=2.0)
        assert null.r_squared < 0.2

    def test_rescaled_conditionals_fit_the_same(self):
        """A uniform factor on the conditionals lands in the intercepts."""
        from metricwalk.core.evaluate import varadhan_diagnostic

        P, D = _exact_conditionals(n=30, seed=4)
        noisy = P * np.exp(np.random.default_rng(5).normal(scale=0.5, size=P.shape))
        base = varadhan_diagnostic(noisy, D, t_hat=2.0)
        scaled = varadhan_diagnostic(7.3 * noisy, D, t_hat=2.0)
        assert base.r_squared < 1.0
        assert scaled.r_squared == pytest.approx(base.r_squared, rel=1e-8)
        assert scaled.slope == pytest.approx(base.slope, rel=1e-8)

    def test_insufficient_pairs(self):
        from metricwalk.core.evaluate import InsufficientPairsError, varadhan_diagnostic

        P = np.eye(4)
        P[0, 1] = 1.0
        with pytest.raises(InsufficientPairsError):
            varadhan_diagnostic(P, np.ones((4, 4)))

    def test_sweep_picks_best_length(self):
        from metricwalk.core.evaluate import varadhan_sweep

        P, D = _exact_conditionals(t=2.0)
        noisy = P * np.exp(np.random.default_rng(3).normal(scale=1.0, size=P.shape))
        sweep = varadhan_sweep({2: P, 4: noisy}, D)
        assert sweep.best_t == 2
        assert set(sweep.to_dict()["fits"]) == {"2", "4"}
