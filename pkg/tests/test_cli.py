"""
metricwalk CLI Tests

Run with: pytest tests/test_cli.py -v
"""

import json

import numpy as np
import pytest
from pathlib import Path

FIXTURES = Path(__file__).parent / "fixtures"


def _corpus_counts(tmp_path):
    """vocab + count on the fixture corpus; returns the output directory."""
    from metricwalk.cli.main import run

    out = tmp_path / "corpus"
    assert run(["vocab", str(FIXTURES / "corpus.txt"), "--out", str(out)]) == 0
    assert run([
        "count", str(FIXTURES / "corpus.txt"), "--vocab", str(out / "vocab.tsv"),
        "--window", "2", "--out", str(out),
    ]) == 0
    return out


def _nb_args(out, counts_dir):
    return [
        "embed", str(counts_dir / "counts.txt"), "--vocab", str(counts_dir / "vocab.tsv"),
        "--loss", "nb", "--dim", "2", "--epochs", "3", "--skip-threshold", "0",
        "--no-line-search", "--initial-step", "0.01", "--out", str(out),
    ]


# ============================================================================
# Entry Point
# ============================================================================

class TestEntryPoint:
    """Test help, doctor and argument errors."""

    def test_help(self, capsys):
        from metricwalk.cli.main import run

        assert run(["--help"]) == 0
        assert "demo-varadhan" in capsys.readouterr().out

    def test_runner_vocab(self, tmp_path):
        from typer.testing import CliRunner
        from metricwalk.cli.main import app

        out = tmp_path / "runner"
        result = CliRunner().invoke(app, ["vocab", str(FIXTURES / "corpus.txt"), "--max-vocab", "3", "--out", str(out)])
        assert result.exit_code == 0
        assert "3 words" in result.output
        assert (out / "vocab.tsv").read_text().splitlines() == ["the\t4", "on\t2", "sat\t2"]

    def test_unknown_option(self, capsys):
        from metricwalk.cli.main import run

        assert run(["embed", "x", "--no-such-flag"]) == 2
        captured = capsys.readouterr()
        assert "--no-such-flag" in captured.out + captured.err

    def test_bad_option_value(self, tmp_path):
        from metricwalk.cli.main import run

        out = tmp_path / "bad"
        assert run(["vocab", str(FIXTURES / "corpus.txt"), "--max", "lots", "--out", str(out)]) == 2
        assert not out.exists()

    def test_max_alias_matches_golden(self, tmp_path):
        from metricwalk.cli.main import run

        out = tmp_path / "alias"
        assert run(["vocab", str(FIXTURES / "corpus.txt"), "--max", "100000", "--out", str(out)]) == 0
        assert (out / "vocab.tsv").read_text() == (FIXTURES / "vocab_golden.tsv").read_text()
        config = json.loads((out / "config.json").read_text())
        assert config["max_vocab"] == 100000

    def test_command_failure_exit_code(self, tmp_path):
        from metricwalk.cli.main import run

        missing = tmp_path / "missing.txt"
        assert run(["vocab", str(missing), "--out", str(tmp_path / "o")]) == 1

    def test_doctor(self, tmp_path, capsys):
        from metricwalk.cli.main import run

        assert run(["doctor", "--mnist-dir", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "numpy" in out
        assert "no IDX files" in out


# ============================================================================
# Corpus Pipeline
# ============================================================================

class TestCorpusPipeline:
    """Test vocab, count and embed on the fixture corpus."""

    def test_vocab_matches_golden(self, tmp_path):
        out = _corpus_counts(tmp_path)
        assert (out / "vocab.tsv").read_text() == (FIXTURES / "vocab_golden.tsv").read_text()
        config = json.loads((out / "config.json").read_text())
        assert config["window"] == 2
        assert config["inputs"]["vocab"].endswith("vocab.tsv")

    def test_parallel_count_is_identical(self, tmp_path):
        """Uniform weights are exact in binary, so shard merging changes nothing."""
        from metricwalk.cli.main import run

        vocab = _corpus_counts(tmp_path) / "vocab.tsv"
        outputs = []
        for workers in ("1", "2"):
            out = tmp_path / f"workers{workers}"
            assert run([
                "count", str(FIXTURES / "corpus.txt"), "--vocab", str(vocab), "--window", "2",
                "--weighting", "uniform", "--workers", workers, "--out", str(out),
            ]) == 0
            outputs.append((out / "counts.txt").read_text())
        assert outputs[0] == outputs[1]
        assert outputs[0].startswith("7 2 uniform ")

    def test_svd_embedding(self, tmp_path):
        from metricwalk.cli.main import run
        from metricwalk.core.io import read_embedding

        counts_dir = _corpus_counts(tmp_path)
        out = tmp_path / "svd"
        assert run([
            "embed", str(counts_dir / "counts.txt"), "--vocab", str(counts_dir / "vocab.tsv"),
            "--loss", "svd", "--dim", "2", "--out", str(out),
        ]) == 0
        vectors = read_embedding(out / "vectors.txt")
        assert vectors.words[0] == "the"
        assert vectors.vectors.shape == (7, 2)
        assert (out / "biases.tsv").exists()
        assert not (out / "fit.json").exists()

    def test_nb_embedding_is_reproducible(self, tmp_path):
        from metricwalk.cli.main import run

        counts_dir = _corpus_counts(tmp_path)
        first, second = tmp_path / "a", tmp_path / "b"
        assert run(_nb_args(first, counts_dir)) == 0
        assert run(_nb_args(second, counts_dir)) == 0
        assert (first / "vectors.txt").read_bytes() == (second / "vectors.txt").read_bytes()
        fit = json.loads((first / "fit.json").read_text())
        assert len(fit["history"]) == 3

    def test_vocab_size_mismatch(self, tmp_path):
        from metricwalk.cli.main import run

        counts_dir = _corpus_counts(tmp_path)
        short = tmp_path / "short.tsv"
        short.write_text("the\t4\n")
        out = tmp_path / "bad"
        code = run([
            "embed", str(counts_dir / "counts.txt"), "--vocab", str(short),
            "--loss", "svd", "--dim", "2", "--out", str(out),
        ])
        assert code == 1
        assert not out.exists()

    def test_failed_embed_leaves_no_partial_outputs(self, tmp_path):
        """mds on counts with zero cells fails; existing files are kept."""
        from metricwalk.cli.main import run

        counts_dir = _corpus_counts(tmp_path)
        out = tmp_path / "mds"
        out.mkdir()
        (out / "keep.txt").write_text("earlier run\n")
        code = run([
            "embed", str(counts_dir / "counts.txt"), "--loss", "mds", "--dim", "2", "--out", str(out),
        ])
        assert code == 1
        assert sorted(p.name for p in out.iterdir()) == ["keep.txt"]


# ============================================================================
# Configuration
# ============================================================================

class TestConfiguration:
    """Test config file layering and validation."""

    def test_unknown_key_fails(self, tmp_path, capsys):
        from metricwalk.cli.main import run

        cfg = tmp_path / "run.cfg"
        cfg.write_text("window = 3\nlearning_rate = 0.1\n")
        out = tmp_path / "out"
        code = run(["vocab", str(FIXTURES / "corpus.txt"), "--config", str(cfg), "--out", str(out)])
        assert code == 1
        assert "learning_rate" in capsys.readouterr().err
        assert not out.exists()

    def test_flags_override_file(self, tmp_path):
        from metricwalk.cli.config import resolve_config

        cfg = tmp_path / "run.cfg"
        cfg.write_text("# corpus settings\nwindow = 3\nmax-vocab = 50\n")
        config = resolve_config(cfg, window=7, dim=None)
        assert config.window == 7
        assert config.max_vocab == 50
        assert config.dim == 300

    def test_invalid_values(self, tmp_path):
        from metricwalk.cli.config import ConfigError, resolve_config

        with pytest.raises(ConfigError, match="theta"):
            resolve_config(theta=-1.0)
        with pytest.raises(ConfigError):
            resolve_config(loss="word2vec")
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("window 3\n")
        with pytest.raises(ConfigError, match="key = value"):
            resolve_config(cfg)

    def test_sweep_parsing(self):
        from metricwalk.cli.config import resolve_config

        assert resolve_config(sweep="1, 3,9").sweep == (1, 3, 9)

    def test_train_config_mapping(self):
        from metricwalk.cli.config import resolve_config
        from metricwalk.core.optimizer import LossKind

        assert resolve_config(loss="glove").train_config().loss is LossKind.GLOVE
        assert resolve_config(loss="svd").train_config().loss is LossKind.NEG_BINOMIAL


# ============================================================================
# Evaluation and Walks
# ============================================================================

class TestEvalAndWalks:
    """Test eval, walk and diagnose end to end."""

    def test_eval_detects_format(self, tmp_path, capsys):
        from metricwalk.cli.main import run
        from metricwalk.core.io import write_embedding

        words = ["athens", "greece", "paris", "france", "boy", "girl", "brother", "sister"]
        vectors = np.array([
            [1, 0, 1, 0, 0], [1, 0, 0, 1, 0], [0, 1, 1, 0, 0], [0, 1, 0, 1, 0],
            [0, 0, 1, 0, 1], [0, 0, 0, 1, 1], [1, 1, 1, 0, 0], [1, 1, 0, 1, 0],
        ], dtype=float)
        embedding = tmp_path / "vectors.txt"
        write_embedding(embedding, words, vectors)
        out = tmp_path / "eval"
        assert run(["eval", str(embedding), str(FIXTURES / "analogies.txt"), "--metric", "l2", "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["format"] == "google"
        assert report["metric"] == "l2"
        assert report["covered"] == 3
        assert report["total"] == 4
        assert report["sections"]["capital-common-countries"]["accuracy"] == 1.0
        assert "capital-common-countries" in capsys.readouterr().out

    def test_walk_count_diagnose(self, tmp_path):
        from metricwalk.cli.main import run
        from metricwalk.core.generators import sample_uniform_square
        from metricwalk.core.io import read_vocab, write_points

        points_path = tmp_path / "points.txt"
        write_points(points_path, sample_uniform_square(30, seed=0))
        walks = tmp_path / "walks"
        assert run([
            "walk", str(points_path), "--process", "knn", "--k", "4",
            "--walks-per-node", "5", "--walk-length", "20", "--out", str(walks),
        ]) == 0
        lines = (walks / "walks.txt").read_text().splitlines()
        assert len(lines) == 150
        assert all(len(line.split()) == 20 for line in lines)
        vocab = read_vocab(walks / "vocab.tsv")
        assert vocab.words[:3] == ("0", "1", "2")
        assert sum(vocab.counts) == 3000

        assert run([
            "count", str(walks / "walks.txt"), "--vocab", str(walks / "vocab.tsv"),
            "--window", "1", "--weighting", "raw", "--out", str(walks),
        ]) == 0
        assert run([
            "diagnose", str(walks / "counts.txt"), str(points_path), "--out", str(walks),
        ]) == 0
        diagnostic = json.loads((walks / "diagnostic.json").read_text())
        assert diagnostic["distance"] == "euclidean"
        assert diagnostic["included"] >= 60
        assert np.isfinite(diagnostic["slope"])

    def test_gaussian_walk(self, tmp_path):
        from metricwalk.cli.main import run
        from metricwalk.core.generators import sample_uniform_square
        from metricwalk.core.io import write_points

        points_path = tmp_path / "points.txt"
        write_points(points_path, sample_uniform_square(10, seed=1))
        out = tmp_path / "gauss"
        assert run([
            "walk", str(points_path), "--process", "gaussian", "--sigma", "0.5",
            "--steps", "45", "--sentence-length", "10", "--out", str(out),
        ]) == 0
        lengths = [len(line.split()) for line in (out / "walks.txt").read_text().splitlines()]
        assert lengths == [10, 10, 10, 10, 5]

    def test_diagnose_size_mismatch(self, tmp_path):
        from metricwalk.cli.main import run

        counts = tmp_path / "counts.txt"
        counts.write_text("3 1 raw 1\n0 1 2\n")
        points = tmp_path / "points.txt"
        points.write_text("2 1\n0\n1\n")
        assert run(["diagnose", str(counts), str(points), "--out", str(tmp_path / "d")]) == 1

    def test_demo_mnist_without_data(self, tmp_path, monkeypatch):
        from metricwalk.cli.main import run
        from metricwalk.cli.utils import MNIST_ENV

        monkeypatch.delenv(MNIST_ENV, raising=False)
        assert run(["demo-mnist", "--mnist-dir", str(tmp_path / "none"), "--out", str(tmp_path / "m")]) == 1

    def test_demo_varadhan_reports_are_byte_identical(self, tmp_path):
        from metricwalk.cli.main import run

        reports = []
        for name in ("first", "second"):
            out = tmp_path / name
            assert run([
                "demo-varadhan", "--points", "150", "--k", "6", "--walks-per-node", "3",
                "--walk-length", "20", "--window", "2", "--sweep", "2,4", "--seed", "5", "--out", str(out),
            ]) == 0
            reports.append((out / "report.json").read_bytes())
        assert reports[0] == reports[1]
        report = json.loads(reports[0])
        assert report["seed"] == 5
        assert set(report["exact_sweep"]["fits"]) == {"2", "4"}
