"""
metricwalk - Metric Recovery from Co-occurrence Counts and Random Walks

Word co-occurrence counts generated by a random walk over a latent metric
space carry that metric: log co-occurrence approaches negative squared
distance. metricwalk generates such walks, counts them, fits embeddings
by negative-binomial regression or spectral methods, and scores the result.

Usage:
    # CLI
    $ metricwalk vocab corpus.txt --out run/
    $ metricwalk count corpus.txt --vocab run/vocab.tsv --out run/
    $ metricwalk embed run/counts.txt --vocab run/vocab.tsv --loss nb --dim 300 --out run/
    $ metricwalk eval run/vectors.txt questions-words.txt --out run/

    # Python API
    from metricwalk import count_cooccurrences, fit, evaluate_task

    model = fit(counts, d=300)
"""

from metricwalk.core import *  # noqa: F401,F403
from metricwalk.core import __all__ as _core_all

__version__ = "0.3.1"
__all__ = list(_core_all) + ["__version__"]
