"""
metricwalk Configuration Management

Resolves the settings of one CLI run from three layers:

1. Built-in defaults (the large-corpus settings: 300 dimensions, window 5,
   10 epochs, theta 50, step search from 10, 30K answer words)
2. A `--config` file of `key = value` lines
3. Explicit command-line flags

Later layers win. The resolved configuration is written next to every
command's outputs as config.json.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from metricwalk.core.evaluate import DEFAULT_ANSWER_VOCAB, DEFAULT_PURITY_K, Metric
from metricwalk.core.optimizer import DEFAULT_SOFTMAX_CAP, LossKind, TrainConfig
from metricwalk.core.schemas import DEFAULT_THETA, MetricWalkError, Weighting

CONFIG_FILENAME = "config.json"


class ConfigError(MetricWalkError):
    """Unknown configuration key or invalid value."""
    pass


# =============================================================================
# Configuration Model
# =============================================================================

class PipelineConfig(BaseModel):
    """Every tunable of every subcommand, with validated types and ranges."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True, use_enum_values=False)

    # Reproducibility
    seed: int = Field(0, ge=0)
    workers: int = Field(1, ge=1)

    # Vocabulary and counting
    max_vocab: int = Field(100000, ge=1)
    min_count: int = Field(0, ge=0)
    lowercase: bool = False
    strip: bool = False
    window: int = Field(5, ge=1)
    weighting: Weighting = Weighting.HARMONIC

    # Embedding
    loss: str = "nb"
    dim: int = Field(300, ge=1)
    epochs: int = Field(10, ge=1)
    theta: float = Field(DEFAULT_THETA, gt=0)
    initial_step: float = Field(10.0, gt=0)
    line_search: bool = True
    skip_threshold: float = Field(10.0, ge=0)
    zero_ratio: float = Field(1.0, ge=0)
    x_max: float = Field(10.0, gt=0)
    exponent: float = Field(0.75, gt=0)
    batch_size: int = Field(256, ge=1)
    softmax_cap: int = Field(DEFAULT_SOFTMAX_CAP, ge=1)
    tau: float = 0.0
    truncate: bool = True
    smoothing: float = Field(0.0, ge=0)

    # Evaluation
    metric: Metric = Metric.COSINE
    answer_vocab: int = Field(DEFAULT_ANSWER_VOCAB, ge=1)
    top_k: int = Field(1, ge=1)
    exclude_query: bool = True
    purity_k: int = Field(DEFAULT_PURITY_K, ge=1)

    # Walks
    process: str = "knn"
    sigma: float = Field(0.1, gt=0)
    sigma_bar: float = Field(0.1, gt=0)
    steps: int = Field(100000, ge=1)
    sentence_length: int = Field(20, ge=1)
    knn_k: Optional[int] = Field(None, ge=1)
    eps: float = Field(0.1, gt=0)
    walks_per_node: int = Field(10, ge=1)
    walk_length: int = Field(200, ge=1)

    # Diagnostics and demos
    t_hat: float = Field(1.0, gt=0)
    distance: str = "euclidean"
    n_points: int = Field(2000, ge=2)
    sweep: Tuple[int, ...] = (2, 4, 8, 16)
    subset: int = Field(4000, ge=2)
    demo_dim: int = Field(2, ge=1)

    @field_validator("loss")
    @classmethod
    def _check_loss(cls, v: str) -> str:
        allowed = {k.value for k in LossKind} | {"svd", "mds"}
        if v not in allowed:
            raise ValueError(f"loss must be one of {sorted(allowed)}")
        return v

    @field_validator("process")
    @classmethod
    def _check_process(cls, v: str) -> str:
        if v not in ("gaussian", "topic", "knn", "eps"):
            raise ValueError("process must be one of gaussian, topic, knn, eps")
        return v

    @field_validator("distance")
    @classmethod
    def _check_distance(cls, v: str) -> str:
        if v not in ("euclidean", "geodesic"):
            raise ValueError("distance must be euclidean or geodesic")
        return v

    @field_validator("sweep", mode="before")
    @classmethod
    def _parse_sweep(cls, v: Any) -> Any:
        if isinstance(v, str):
            return tuple(int(t) for t in v.replace(" ", "").split(",") if t)
        return v

    def train_config(self) -> TrainConfig:
        """Optimizer settings for the pair and softmax losses."""
        return TrainConfig(
            epochs=self.epochs,
            initial_step=self.initial_step,
            line_search=self.line_search,
            skip_threshold=self.skip_threshold,
            seed=self.seed,
            loss=LossKind(self.loss) if self.loss in {k.value for k in LossKind} else LossKind.NEG_BINOMIAL,
            theta=self.theta,
            x_max=self.x_max,
            exponent=self.exponent,
            zero_ratio=self.zero_ratio,
            batch_size=self.batch_size,
            workers=self.workers,
            softmax_cap=self.softmax_cap,
        )

    def to_dict(self) -> Dict[str, Any]:
        return json.loads(self.model_dump_json())

    def save(self, out_dir: Path, extra: Optional[Dict[str, Any]] = None) -> Path:
        """Write config.json (sorted keys) into the output directory."""
        path = Path(out_dir) / CONFIG_FILENAME
        data = self.to_dict()
        if extra:
            data["inputs"] = {k: str(v) for k, v in extra.items()}
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


# =============================================================================
# Loading
# =============================================================================

def parse_config_file(path: Path) -> Dict[str, str]:
    """Read `key = value` lines; '#' starts a comment, blank lines are skipped."""
    values: Dict[str, str] = {}
    known = set(PipelineConfig.model_fields)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def resolve_config(config_path: Optional[Path] = None, **flags: Any) -> PipelineConfig:
    """
    Defaults < config file < flags.

    Flags left at None are treated as not given.
    """
    data: Dict[str, Any] = {}
    if config_path is not None:
        data.update(parse_config_file(config_path))
    data.update({k: v for k, v in flags.items() if v is not None})
    unknown = set(data) - set(PipelineConfig.model_fields)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    try:
        return PipelineConfig(**data)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"invalid configuration: {problems}")
