"""
metricwalk Core Module

The computational engine: counts in, metric embeddings out.

Pipeline:
    corpus / point cloud
        -> generators, graphs     (Gaussian, topic and graph random walks)
        -> cooccur                (vocabulary, windowed counts)
        -> optimizer, spectral    (regression fits, PMI-SVD, classical MDS)
        -> evaluate               (analogies, purity, log-conditional diagnostic)

Components:
    - Schemas: shared data types and the error hierarchy
    - IO: corpus, counts, points, MNIST IDX, embeddings and task files
    - Pipelines: the chained demo experiments
"""

from .schemas import (
    MetricWalkError,
    FormatError,
    Vocabulary,
    Weighting,
    CooccurrenceCounts,
    PointCloud,
    GraphKind,
    SpatialGraph,
    EmbeddingModel,
    WordVectors,
    ItemKind,
    EvalItem,
    EvalReport,
)

from .cooccur import (
    tokenize,
    build_vocabulary,
    count_cooccurrences,
    merge_counts,
    counts_from_matrix,
)

from .generators import (
    sample_uniform_square,
    exact_transition_matrix,
    stationary_distribution,
    GaussianWalkConfig,
    gaussian_walk,
    GaussianMixtureDensity,
    TopicModelConfig,
    topic_walk,
)

from .graphs import (
    build_knn_graph,
    build_eps_graph,
    simple_random_walks,
    t_step_conditionals,
    graph_geodesics,
    survey_graph_to_counts,
)

from .optimizer import (
    LossKind,
    TrainConfig,
    FitResult,
    DivergenceError,
    nb_loglik,
    nb_gradients,
    glove_loss_grad,
    softmax_loss_grad,
    train,
    fit,
)

from .spectral import (
    pmi_matrix,
    randomized_svd,
    svd_embed,
    mds_embed,
    procrustes_align,
)

from .evaluate import (
    Metric,
    evaluate_task,
    rank_candidates,
    knn_purity,
    varadhan_diagnostic,
    varadhan_sweep,
)

__all__ = [
    # Schemas
    "MetricWalkError",
    "FormatError",
    "Vocabulary",
    "Weighting",
    "CooccurrenceCounts",
    "PointCloud",
    "GraphKind",
    "SpatialGraph",
    "EmbeddingModel",
    "WordVectors",
    "ItemKind",
    "EvalItem",
    "EvalReport",
    # Counting
    "tokenize",
    "build_vocabulary",
    "count_cooccurrences",
    "merge_counts",
    "counts_from_matrix",
    # Generators
    "sample_uniform_square",
    "exact_transition_matrix",
    "stationary_distribution",
    "GaussianWalkConfig",
    "gaussian_walk",
    "GaussianMixtureDensity",
    "TopicModelConfig",
    "topic_walk",
    # Graphs
    "build_knn_graph",
    "build_eps_graph",
    "simple_random_walks",
    "t_step_conditionals",
    "graph_geodesics",
    "survey_graph_to_counts",
    # Fitting
    "LossKind",
    "TrainConfig",
    "FitResult",
    "DivergenceError",
    "nb_loglik",
    "nb_gradients",
    "glove_loss_grad",
    "softmax_loss_grad",
    "train",
    "fit",
    # Spectral
    "pmi_matrix",
    "randomized_svd",
    "svd_embed",
    "mds_embed",
    "procrustes_align",
    # Evaluation
    "Metric",
    "evaluate_task",
    "rank_candidates",
    "knn_purity",
    "varadhan_diagnostic",
    "varadhan_sweep",
]
