"""
metricwalk CLI Utilities

Logging setup, artifact safety and environment checks for the CLI.

Key features:
- Rich log handler on stderr (WARNING, INFO with --verbose, DEBUG with --debug)
- Artifact guard: partial outputs are removed when a command fails
- Environment check for `metricwalk doctor`
"""

import logging
import os
import shutil
import sys
from contextlib import contextmanager
from importlib import metadata
from pathlib import Path
from typing import Iterator, List, Optional, Set, Tuple

from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler

from metricwalk.core.io import find_mnist
from metricwalk.core.schemas import MetricWalkError

logger = logging.getLogger("metricwalk")

MNIST_ENV = "METRICWALK_MNIST_DIR"

# Errors reported as a one-line message and exit code 1
USER_ERRORS = (MetricWalkError, ValidationError, ValueError, OSError)


class CommandFailed(Exception):
    """Raised by the artifact guard after a reported failure."""

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


# =============================================================================
# Debugging Utilities
# =============================================================================

def setup_logging(debug: bool = False, verbose: bool = False):
    """Configure logging based on debug/verbose flags."""
    if debug:
        level = logging.DEBUG
        format_str = "%(name)s:%(lineno)d - %(message)s"
    elif verbose:
        level = logging.INFO
        format_str = "%(message)s"
    else:
        level = logging.WARNING
        format_str = "%(message)s"

    handler = RichHandler(
        console=Console(stderr=True),
        show_time=debug,
        show_path=False,
        rich_tracebacks=debug,
    )
    logging.basicConfig(level=level, format=format_str, handlers=[handler], force=True)
    logger.setLevel(level)


def enable_traceback():
    """Full Python tracebacks instead of one-line error messages."""
    import traceback
    sys.excepthook = lambda *args: traceback.print_exception(*args)


# =============================================================================
# Artifact Safety
# =============================================================================

def _snapshot(directory: Path) -> Set[Path]:
    return set(directory.iterdir()) if directory.is_dir() else set()


def _remove(path: Path):
    if path.is_dir():
        shutil.rmtree(path, ignore_errors=True)
    else:
        path.unlink(missing_ok=True)


@contextmanager
def artifact_guard(out_dir: Optional[Path], debug: bool = False) -> Iterator[Optional[Path]]:
    """
    Run a command body; on failure delete whatever it created in `out_dir`.

    Known errors become CommandFailed (one-line message, exit 1) unless
    `debug` is set, in which case they propagate with their traceback.
    """
    created_dir = out_dir is not None and not out_dir.exists()
    before = _snapshot(out_dir) if out_dir is not None else set()
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    try:
        yield out_dir
    except BaseException as e:
        if out_dir is not None:
            for path in _snapshot(out_dir) - before:
                _remove(path)
            if created_dir and not any(out_dir.iterdir()):
                out_dir.rmdir()
            logger.debug("removed partial outputs in %s", out_dir)
        if debug or not isinstance(e, USER_ERRORS):
            raise
        raise CommandFailed(str(e)) from e


# =============================================================================
# Environment Checks
# =============================================================================

REQUIRED_PACKAGES = ("numpy", "scipy", "networkx", "pydantic", "typer", "rich")


def check_environment(mnist_dir: Optional[Path] = None) -> List[Tuple[str, bool, str]]:
    """
    Check interpreter, libraries and optional data.

    Returns list of (name, is_ok, message). MNIST is optional and reported
    as ok either way.
    """
    checks = []

    py_version = f"Python {sys.version_info.major}.{sys.version_info.minor}.{sys.version_info.micro}"
    checks.append(("python", sys.version_info >= (3, 10), py_version))

    for package in REQUIRED_PACKAGES:
        try:
            checks.append((package, True, metadata.version(package)))
        except metadata.PackageNotFoundError:
            checks.append((package, False, "not installed"))

    directory = mnist_dir or (Path(os.environ[MNIST_ENV]) if os.environ.get(MNIST_ENV) else None)
    if directory is None:
        checks.append(("mnist", True, f"not configured (set {MNIST_ENV} or pass --mnist-dir)"))
    else:
        found = find_mnist(directory)
        message = f"found in {directory}" if found else f"no IDX files in {directory}"
        checks.append(("mnist", True, message))

    return checks


def print_environment_check(console: Console, mnist_dir: Optional[Path] = None) -> bool:
    """Print environment check results."""
    checks = check_environment(mnist_dir)

    console.print("[bold]Environment Check[/bold]")

    for name, ok, message in checks:
        icon = "[green]✓[/green]" if ok else "[red]✗[/red]"
        console.print(f"  {icon} {name}: {message}")

    return all(ok for _, ok, _ in checks)
