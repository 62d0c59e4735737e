"""
metricwalk CLI Module

Command-line interface for the metricwalk toolkit.

Commands:
    vocab          - Frequency-ordered vocabulary from a corpus
    count          - Windowed co-occurrence counts
    walk           - Random-walk sentences over a point cloud
    embed          - Regression, PMI-SVD or MDS embeddings
    eval           - Analogy, series, classification and SAT accuracy
    diagnose       - Log-conditional vs squared distance regression
    demo-varadhan  - Walk metric recovery on uniform points
    demo-mnist     - Walk embeddings of MNIST digits
    doctor         - Check environment
"""

try:
    from metricwalk.cli.main import app, run
    __all__ = ["app", "run"]
except ImportError:
    # typer not installed - CLI not available
    app = None
    run = None
    __all__ = []
