"""
metricwalk CLI

Usage:
    metricwalk vocab corpus.txt --out run/                 # word counts
    metricwalk count corpus.txt --vocab run/vocab.tsv      # windowed counts
    metricwalk walk points.txt --process knn --out walks/  # walks on a point cloud
    metricwalk embed run/counts.txt --loss nb --theta 50 --dim 300
    metricwalk eval run/vectors.txt questions.txt          # analogy accuracy
    metricwalk diagnose counts.txt points.txt              # log-conditionals vs distance
    metricwalk demo-varadhan --out demo/                   # walk metric recovery report
    metricwalk demo-mnist --mnist-dir data/mnist           # manifold recovery report
    metricwalk doctor                                      # check environment

Every command writes its outputs plus config.json into --out. Settings
resolve as defaults < --config file < flags.
"""

import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np
import typer
from rich.console import Console
from rich.table import Table
from rich.box import ROUNDED
from scipy.spatial.distance import cdist

from metricwalk.cli.config import PipelineConfig, resolve_config
from metricwalk.cli.detection import detect_task_format
from metricwalk.cli.utils import (
    MNIST_ENV,
    CommandFailed,
    artifact_guard,
    enable_traceback,
    print_environment_check,
    setup_logging,
)
from metricwalk.core import io
from metricwalk.core.cooccur import (
    CountsMismatchError,
    build_vocabulary,
    count_cooccurrences,
    merge_counts,
)
from metricwalk.core.evaluate import evaluate_task, varadhan_diagnostic
from metricwalk.core.generators import (
    GaussianMixtureDensity,
    GaussianWalkConfig,
    TopicModelConfig,
    gaussian_walk,
    topic_walk,
)
from metricwalk.core.graphs import build_eps_graph, build_knn_graph, graph_geodesics, simple_random_walks
from metricwalk.core.optimizer import LossKind, TrainConfig, full_matrix, train
from metricwalk.core.pipelines import MnistSettings, VaradhanSettings, demo_mnist, demo_varadhan
from metricwalk.core.schemas import FormatError, Vocabulary
from metricwalk.core.seeding import derive_seed
from metricwalk.core.spectral import mds_embed, pmi_matrix, svd_embed

app = typer.Typer(
    name="metricwalk",
    help="Recover metric embeddings from co-occurrence counts and random walks.",
    add_completion=False,
    no_args_is_help=True,
)
console = Console()
err_console = Console(stderr=True)

DEFAULT_KNN_K = 10
DEFAULT_MNIST_KNN_K = 20


# =============================================================================
# Shared Options
# =============================================================================

OUT_OPTION = typer.Option(Path("metricwalk-out"), "--out", "-o", help="Output directory")
CONFIG_OPTION = typer.Option(None, "--config", "-c", help="key = value settings file")
SEED_OPTION = typer.Option(None, "--seed", "-s", help="Root random seed (default 0)")
WORKERS_OPTION = typer.Option(None, "--workers", "-w", help="Parallel workers (default 1)")
VERBOSE_OPTION = typer.Option(False, "--verbose", "-v", help="Progress logging")
DEBUG_OPTION = typer.Option(False, "--debug", help="Debug logging and full tracebacks")


def _execute(out: Optional[Path], debug: bool, verbose: bool, body: Callable[[], None]):
    """Run a command body with logging, artifact cleanup and error mapping."""
    setup_logging(debug, verbose)
    if debug:
        enable_traceback()
    try:
        with artifact_guard(out, debug):
            body()
    except CommandFailed as e:
        err_console.print(f"[red]✗ Error:[/red] {e.message}")
        raise typer.Exit(1)


def _save_config(cfg: PipelineConfig, out: Path, **inputs):
    cfg.save(out, {k: v for k, v in inputs.items() if v is not None})


def _read_vocab_for(counts_n: int, vocab_path: Optional[Path]) -> Vocabulary:
    if vocab_path is None:
        return Vocabulary.from_ids(counts_n)
    vocab = io.read_vocab(vocab_path)
    if len(vocab) != counts_n:
        raise CountsMismatchError(
            f"vocabulary has {len(vocab)} words but the counts are {counts_n} x {counts_n}"
        )
    return vocab


# =============================================================================
# Corpus Commands
# =============================================================================

@app.command("vocab")
def vocab_cmd(
    corpus: Path = typer.Argument(..., help="Whitespace-tokenized corpus (.gz ok)"),
    max_vocab: Optional[int] = typer.Option(None, "--max-vocab", "--max", help="Keep the most frequent words"),
    min_count: Optional[int] = typer.Option(None, "--min-count", help="Drop rarer words"),
    lowercase: Optional[bool] = typer.Option(None, "--lowercase/--keep-case", help="Lowercase tokens"),
    strip: Optional[bool] = typer.Option(None, "--strip/--no-strip", help="Remove punctuation and digits"),
    out: Path = OUT_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    workers: Optional[int] = WORKERS_OPTION,
    verbose: bool = VERBOSE_OPTION,
    debug: bool = DEBUG_OPTION,
):
    """Build a frequency-ordered vocabulary."""
    def body():
        cfg = resolve_config(
            config, max_vocab=max_vocab, min_count=min_count,
            lowercase=lowercase, strip=strip, seed=seed, workers=workers,
        )
        sentences = io.read_corpus(corpus, lowercase=cfg.lowercase, strip=cfg.strip)
        vocab = build_vocabulary(
            (tok for sentence in sentences for tok in sentence), cfg.max_vocab, cfg.min_count
        )
        io.write_vocab(out / "vocab.tsv", vocab)
        _save_config(cfg, out, corpus=corpus)
        console.print(f"[green]✓[/green] {len(vocab)} words -> {out / 'vocab.tsv'}")

    _execute(out, debug, verbose, body)


def _count_sharded(sentences: List[List[str]], vocab: Vocabulary, cfg: PipelineConfig):
    """Count contiguous corpus shards in parallel and merge them in shard order."""
    size = -(-len(sentences) // cfg.workers) if sentences else 1
    shards = [sentences[lo:lo + size] for lo in range(0, max(len(sentences), 1), size)]
    with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
        parts = list(executor.map(
            lambda shard: count_cooccurrences(shard, vocab, cfg.window, cfg.weighting), shards
        ))
    counts = parts[0]
    for part in parts[1:]:
        counts = merge_counts(counts, part)
    return counts


@app.command("count")
def count_cmd(
    corpus: Path = typer.Argument(..., help="Corpus or walk file"),
    vocab_path: Path = typer.Option(..., "--vocab", help="vocab.tsv from `metricwalk vocab` or `walk`"),
    window: Optional[int] = typer.Option(None, "--window", help="Window size W (default 5)"),
    weighting: Optional[str] = typer.Option(None, "--weighting", help="harmonic | uniform | raw"),
    lowercase: Optional[bool] = typer.Option(None, "--lowercase/--keep-case", help="Lowercase tokens"),
    strip: Optional[bool] = typer.Option(None, "--strip/--no-strip", help="Remove punctuation and digits"),
    out: Path = OUT_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    workers: Optional[int] = WORKERS_OPTION,
    verbose: bool = VERBOSE_OPTION,
    debug: bool = DEBUG_OPTION,
):
    """Accumulate windowed co-occurrence counts."""
    def body():
        cfg = resolve_config(
            config, window=window, weighting=weighting, lowercase=lowercase,
            strip=strip, seed=seed, workers=workers,
        )
        vocab = io.read_vocab(vocab_path)
        sentences = io.read_corpus(corpus, lowercase=cfg.lowercase, strip=cfg.strip)
        if cfg.workers > 1:
            counts = _count_sharded(list(sentences), vocab, cfg)
        else:
            counts = count_cooccurrences(sentences, vocab, cfg.window, cfg.weighting)
        io.write_counts(out / "counts.txt", counts)
        _save_config(cfg, out, corpus=corpus, vocab=vocab_path)
        console.print(
            f"[green]✓[/green] {counts.total_tokens} tokens, {counts.nnz} stored pairs "
            f"-> {out / 'counts.txt'}"
        )

    _execute(out, debug, verbose, body)


# =============================================================================
# Walk Generation
# =============================================================================

def _walk_sentences(points, cfg: PipelineConfig):
    walk_seed = derive_seed(cfg.seed, "walks")
    if cfg.process == "knn":
        graph = build_knn_graph(points, cfg.knn_k or DEFAULT_KNN_K)
        return simple_random_walks(graph, cfg.walks_per_node, cfg.walk_length, walk_seed)
    if cfg.process == "eps":
        graph = build_eps_graph(points, cfg.eps)
        return simple_random_walks(graph, cfg.walks_per_node, cfg.walk_length, walk_seed)
    if cfg.process == "gaussian":
        walk_config = GaussianWalkConfig(
            sigma=cfg.sigma, steps=cfg.steps, sentence_length=cfg.sentence_length
        )
        return gaussian_walk(points, walk_config, walk_seed)

    # topic walk: latent density is one Gaussian fitted to the point cloud
    scale = float(np.sqrt(np.mean(np.var(points.coords, axis=0)))) or 1.0
    density = GaussianMixtureDensity(means=points.coords.mean(axis=0), scales=scale)
    topic_config = TopicModelConfig(
        sigma=cfg.sigma, sigma_bar=cfg.sigma_bar, alpha=np.ones(points.n), density=density
    )
    tokens = np.fromiter(topic_walk(points, topic_config, cfg.steps, walk_seed), dtype=np.int64)
    return (tokens[lo:lo + cfg.sentence_length] for lo in range(0, tokens.size, cfg.sentence_length))


@app.command("walk")
def walk_cmd(
    points_path: Path = typer.Argument(..., help="Point cloud file ('n d' header)"),
    process: Optional[str] = typer.Option(None, "--process", "-p", help="knn | eps | gaussian | topic"),
    knn_k: Optional[int] = typer.Option(None, "--k", help="Neighbors per vertex (knn)"),
    eps: Optional[float] = typer.Option(None, "--eps", help="Radius (eps graph)"),
    walks_per_node: Optional[int] = typer.Option(None, "--walks-per-node", help="Walks started per vertex"),
    walk_length: Optional[int] = typer.Option(None, "--walk-length", help="Ids per walk"),
    sigma: Optional[float] = typer.Option(None, "--sigma", help="Kernel scale (gaussian, topic)"),
    sigma_bar: Optional[float] = typer.Option(None, "--sigma-bar", help="Emission scale (topic)"),
    steps: Optional[int] = typer.Option(None, "--steps", help="Total tokens (gaussian, topic)"),
    sentence_length: Optional[int] = typer.Option(None, "--sentence-length", help="Ids per sentence"),
    out: Path = OUT_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    workers: Optional[int] = WORKERS_OPTION,
    verbose: bool = VERBOSE_OPTION,
    debug: bool = DEBUG_OPTION,
):
    """Generate random-walk sentences over a point cloud."""
    def body():
        cfg = resolve_config(
            config, process=process, knn_k=knn_k, eps=eps, walks_per_node=walks_per_node,
            walk_length=walk_length, sigma=sigma, sigma_bar=sigma_bar, steps=steps,
            sentence_length=sentence_length, seed=seed, workers=workers,
        )
        points = io.read_points(points_path)
        visits = np.zeros(points.n, dtype=np.int64)
        sentences = 0
        with open(out / "walks.txt", "w", encoding="utf-8") as f:
            for sentence in _walk_sentences(points, cfg):
                visits += np.bincount(sentence, minlength=points.n)
                f.write(" ".join(map(str, sentence.tolist())) + "\n")
                sentences += 1
        # node order, so token "i" maps back to row i of the point file
        vocab = Vocabulary(
            words=tuple(str(i) for i in range(points.n)), counts=tuple(visits.tolist())
        )
        io.write_vocab(out / "vocab.tsv", vocab)
        _save_config(cfg, out, points=points_path)
        console.print(
            f"[green]✓[/green] {sentences} {cfg.process} sentences, "
            f"{int(visits.sum())} tokens -> {out / 'walks.txt'}"
        )

    _execute(out, debug, verbose, body)


# =============================================================================
# Embedding
# =============================================================================

EMBED_METHODS = [k.value for k in LossKind] + ["svd", "mds"]


def _embed(counts, cfg: PipelineConfig, out: Path):
    if cfg.loss in ("svd", "mds"):
        if cfg.loss == "svd":
            pmi = pmi_matrix(counts, smoothing=cfg.smoothing)
            return svd_embed(pmi, cfg.dim, tau=cfg.tau, truncate=cfg.truncate, seed=derive_seed(cfg.seed, "svd"))
        dense = full_matrix(counts).toarray() + cfg.smoothing
        if np.any(dense <= 0):
            raise ValueError("mds needs strictly positive counts; pass --smoothing > 0")
        return mds_embed(np.log(dense), cfg.dim)

    train_config = TrainConfig.from_dict({**cfg.train_config().to_dict(), "seed": derive_seed(cfg.seed, "fit")})
    result = train(counts, cfg.dim, train_config)
    io.write_json(out / "fit.json", result.to_dict())
    return result.model


@app.command("embed")
def embed_cmd(
    counts_path: Path = typer.Argument(..., help="counts.txt from `metricwalk count`"),
    vocab_path: Optional[Path] = typer.Option(None, "--vocab", help="Row labels (default: node ids)"),
    loss: Optional[str] = typer.Option(None, "--loss", "-l", help=" | ".join(EMBED_METHODS)),
    dim: Optional[int] = typer.Option(None, "--dim", "-d", help="Embedding dimension (default 300)"),
    theta: Optional[float] = typer.Option(None, "--theta", help="Negative binomial dispersion (default 50)"),
    epochs: Optional[int] = typer.Option(None, "--epochs", help="Passes over the pairs (default 10)"),
    initial_step: Optional[float] = typer.Option(None, "--initial-step", help="Step search start (default 10)"),
    line_search: Optional[bool] = typer.Option(None, "--line-search/--no-line-search", help="Search the initial step"),
    skip_threshold: Optional[float] = typer.Option(None, "--skip-threshold", help="Keep pairs w.p. min(1, C/threshold)"),
    zero_ratio: Optional[float] = typer.Option(None, "--zero-ratio", help="Sampled zero pairs per stored pair"),
    tau: Optional[float] = typer.Option(None, "--tau", help="PMI shift before truncation (svd)"),
    truncate: Optional[bool] = typer.Option(None, "--truncate/--no-truncate", help="Clip negative PMI (svd)"),
    smoothing: Optional[float] = typer.Option(None, "--smoothing", help="Additive count smoothing (svd, mds)"),
    out: Path = OUT_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    workers: Optional[int] = WORKERS_OPTION,
    verbose: bool = VERBOSE_OPTION,
    debug: bool = DEBUG_OPTION,
):
    """Fit word vectors by regression, PMI-SVD or classical MDS."""
    def body():
        cfg = resolve_config(
            config, loss=loss, dim=dim, theta=theta, epochs=epochs, initial_step=initial_step,
            line_search=line_search, skip_threshold=skip_threshold, zero_ratio=zero_ratio,
            tau=tau, truncate=truncate, smoothing=smoothing, seed=seed, workers=workers,
        )
        counts = io.read_counts(counts_path)
        vocab = _read_vocab_for(counts.vocab_size, vocab_path)
        model = _embed(counts, cfg, out)
        io.write_model(out, model, vocab.words)
        _save_config(cfg, out, counts=counts_path, vocab=vocab_path)
        console.print(f"[green]✓[/green] {cfg.loss} embedding {model.n} x {model.dim} -> {out / 'vectors.txt'}")

    _execute(out, debug, verbose, body)


# =============================================================================
# Evaluation and Diagnostics
# =============================================================================

def _print_report(report):
    table = Table(box=ROUNDED, title=f"metric={report.metric}")
    table.add_column("section")
    table.add_column("covered", justify="right")
    table.add_column("accuracy", justify="right")
    for name, section in sorted(report.sections.items()):
        acc = section.correct / section.covered if section.covered else 0.0
        table.add_row(name, f"{section.covered}/{section.total}", f"{acc:.3f}")
    table.add_row("[bold]all[/bold]", f"{report.covered}/{report.total}", f"[bold]{report.accuracy:.3f}[/bold]")
    console.print(table)


@app.command("eval")
def eval_cmd(
    embedding: Path = typer.Argument(..., help="word2vec text vectors"),
    tasks: Path = typer.Argument(..., help="Task file"),
    fmt: Optional[str] = typer.Option(None, "--format", "-f", help="google | sat | tsv (default: detect)"),
    metric: Optional[str] = typer.Option(None, "--metric", "-m", help="cosine | l2"),
    answer_vocab: Optional[int] = typer.Option(None, "--answer-vocab", help="Candidate answers (default 30000)"),
    top_k: Optional[int] = typer.Option(None, "--top-k", help="Also report top-k accuracy"),
    exclude_query: Optional[bool] = typer.Option(None, "--exclude-query/--allow-query", help="Drop question words from answers"),
    lowercase: Optional[bool] = typer.Option(None, "--lowercase/--keep-case", help="Lowercase task words"),
    out: Path = OUT_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    workers: Optional[int] = WORKERS_OPTION,
    verbose: bool = VERBOSE_OPTION,
    debug: bool = DEBUG_OPTION,
):
    """Score vectors on analogy, series, classification or SAT items."""
    def body():
        cfg = resolve_config(
            config, metric=metric, answer_vocab=answer_vocab, top_k=top_k,
            exclude_query=exclude_query, lowercase=lowercase, seed=seed, workers=workers,
        )
        task_format = fmt or detect_task_format(tasks).format
        items = io.read_tasks(tasks, task_format, lowercase=cfg.lowercase)
        vectors = io.read_embedding(embedding)
        report = evaluate_task(
            items, vectors, cfg.metric, cfg.answer_vocab, top_k=cfg.top_k, exclude_query=cfg.exclude_query
        )
        io.write_json(out / "report.json", {**report.to_dict(), "format": task_format})
        _save_config(cfg, out, embedding=embedding, tasks=tasks)
        _print_report(report)

    _execute(out, debug, verbose, body)


@app.command("diagnose")
def diagnose_cmd(
    counts_path: Path = typer.Argument(..., help="Counts over point ids"),
    points_path: Path = typer.Argument(..., help="Point cloud with the same ids"),
    t_hat: Optional[float] = typer.Option(None, "--t-hat", help="Walk length scale (default 1)"),
    distance: Optional[str] = typer.Option(None, "--distance", help="euclidean | geodesic"),
    knn_k: Optional[int] = typer.Option(None, "--k", help="Neighbors for geodesic distances"),
    out: Path = OUT_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    workers: Optional[int] = WORKERS_OPTION,
    verbose: bool = VERBOSE_OPTION,
    debug: bool = DEBUG_OPTION,
):
    """Regress -t log conditionals on squared distances."""
    def body():
        cfg = resolve_config(
            config, t_hat=t_hat, distance=distance, knn_k=knn_k, seed=seed, workers=workers,
        )
        counts = io.read_counts(counts_path)
        points = io.read_points(points_path)
        if points.n != counts.vocab_size:
            raise CountsMismatchError(f"{points.n} points but counts over {counts.vocab_size} ids")
        if cfg.distance == "geodesic":
            sq_dist = graph_geodesics(build_knn_graph(points, cfg.knn_k or DEFAULT_KNN_K)) ** 2
        else:
            sq_dist = cdist(points.coords, points.coords, metric="sqeuclidean")
        fit = varadhan_diagnostic(counts, sq_dist, t_hat=cfg.t_hat)
        io.write_json(out / "diagnostic.json", {**fit.to_dict(), "distance": cfg.distance})
        _save_config(cfg, out, counts=counts_path, points=points_path)
        console.print(
            f"[green]✓[/green] slope {fit.slope:.4g}, R² {fit.r_squared:.4f} "
            f"over {fit.included} pairs ({fit.excluded_zero} zero cells excluded)"
        )

    _execute(out, debug, verbose, body)


# =============================================================================
# Demos
# =============================================================================

@app.command("demo-varadhan")
def demo_varadhan_cmd(
    n_points: Optional[int] = typer.Option(None, "--points", "-n", help="Uniform points (default 2000)"),
    knn_k: Optional[int] = typer.Option(None, "--k", help="Neighbors per vertex (default 10)"),
    walks_per_node: Optional[int] = typer.Option(None, "--walks-per-node", help="Walks per vertex"),
    walk_length: Optional[int] = typer.Option(None, "--walk-length", help="Ids per walk"),
    window: Optional[int] = typer.Option(None, "--window", help="Counting window"),
    sweep: Optional[str] = typer.Option(None, "--sweep", help="Walk lengths, e.g. 2,4,8,16"),
    out: Path = OUT_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    workers: Optional[int] = WORKERS_OPTION,
    verbose: bool = VERBOSE_OPTION,
    debug: bool = DEBUG_OPTION,
):
    """Walk metric recovery on a uniform kNN graph."""
    def body():
        cfg = resolve_config(
            config, n_points=n_points, knn_k=knn_k, walks_per_node=walks_per_node,
            walk_length=walk_length, window=window, sweep=sweep, seed=seed, workers=workers,
        )
        settings = VaradhanSettings(
            n_points=cfg.n_points, knn_k=cfg.knn_k or DEFAULT_KNN_K,
            walks_per_node=cfg.walks_per_node, walk_length=cfg.walk_length,
            window=cfg.window, weighting=cfg.weighting, sweep=tuple(cfg.sweep), seed=cfg.seed,
        )
        report = demo_varadhan(settings)
        io.write_json(out / "report.json", report)
        _save_config(cfg, out)

        table = Table(box=ROUNDED, title="log conditionals vs squared distance")
        table.add_column("source")
        table.add_column("R²", justify="right")
        table.add_column("slope", justify="right")
        table.add_row("walk counts", f"{report['walk_counts']['r_squared']:.4f}", f"{report['walk_counts']['slope']:.4g}")
        for t, fit in sorted(report["exact_sweep"]["fits"].items(), key=lambda kv: int(kv[0])):
            table.add_row(f"P^{t}", f"{fit['r_squared']:.4f}", f"{fit['slope']:.4g}")
        table.add_row("permuted", f"{report['permutation_null']['r_squared']:.4f}", f"{report['permutation_null']['slope']:.4g}")
        console.print(table)

    _execute(out, debug, verbose, body)


@app.command("demo-mnist")
def demo_mnist_cmd(
    mnist_dir: Optional[Path] = typer.Option(None, "--mnist-dir", help=f"IDX files (default ${MNIST_ENV})"),
    split: str = typer.Option("train", "--split", help="train | test"),
    subset: Optional[int] = typer.Option(None, "--subset", help="Images sampled (default 4000)"),
    knn_k: Optional[int] = typer.Option(None, "--k", help="Neighbors per vertex (default 20)"),
    demo_dim: Optional[int] = typer.Option(None, "--dim", "-d", help="Embedding dimension (default 2)"),
    epochs: Optional[int] = typer.Option(None, "--epochs", help="Regression epochs"),
    purity_k: Optional[int] = typer.Option(None, "--purity-k", help="Neighbors for label purity"),
    out: Path = OUT_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    workers: Optional[int] = WORKERS_OPTION,
    verbose: bool = VERBOSE_OPTION,
    debug: bool = DEBUG_OPTION,
):
    """Walk embeddings of an MNIST subset, scored by kNN label purity."""
    def body():
        cfg = resolve_config(
            config, subset=subset, knn_k=knn_k, demo_dim=demo_dim, epochs=epochs,
            purity_k=purity_k, seed=seed, workers=workers,
        )
        directory = mnist_dir or (Path(os.environ[MNIST_ENV]) if os.environ.get(MNIST_ENV) else None)
        found = io.find_mnist(directory, split) if directory else None
        if found is None:
            raise FormatError(f"MNIST IDX files not found (pass --mnist-dir or set {MNIST_ENV})")
        settings = MnistSettings(
            subset=cfg.subset, knn_k=cfg.knn_k or DEFAULT_MNIST_KNN_K,
            walks_per_node=cfg.walks_per_node, walk_length=cfg.walk_length, window=cfg.window,
            weighting=cfg.weighting, dim=cfg.demo_dim, purity_k=cfg.purity_k, seed=cfg.seed,
            train=cfg.train_config(),
        )
        result = demo_mnist(found[0], found[1], settings)
        io.write_json(out / "report.json", result.report)
        words = [str(int(label)) for label in result.points.labels]
        io.write_embedding(out / "vectors_regression.txt", words, result.regression.vectors())
        io.write_embedding(out / "vectors_svd.txt", words, result.svd.vectors())
        _save_config(cfg, out, mnist_dir=directory)
        console.print(
            f"[green]✓[/green] purity@{cfg.purity_k}: regression "
            f"{result.report['regression']['purity']:.3f}, svd {result.report['svd']['purity']:.3f}"
        )

    _execute(out, debug, verbose, body)


@app.command("doctor")
def doctor(
    mnist_dir: Optional[Path] = typer.Option(None, "--mnist-dir", help="Check for MNIST IDX files"),
):
    """Check environment."""
    console.print("\n[bold]metricwalk Doctor[/bold]\n")
    ok = print_environment_check(console, mnist_dir)
    console.print()
    if not ok:
        raise typer.Exit(1)


# =============================================================================
# Entry Point Wrapper
# =============================================================================

def run(argv: Optional[List[str]] = None) -> int:
    """Run the CLI on `argv` and return the process exit code."""
    command = typer.main.get_command(app)
    try:
        command.main(
            args=list(sys.argv[1:] if argv is None else argv),
            prog_name="metricwalk",
            standalone_mode=True,
        )
    except SystemExit as e:
        if e.code is None or isinstance(e.code, int):
            return e.code or 0
        err_console.print(str(e.code))
        return 1
    return 0


def cli():
    """Main entry point for the CLI."""
    sys.exit(run())


if __name__ == "__main__":
    cli()
