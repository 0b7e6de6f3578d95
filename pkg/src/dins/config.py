"""Configuration dataclasses and seed-derived random streams."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

DEFAULT_BIN_WIDTH_SECONDS = 300
DEFAULT_RECENCY_DECAY = math.log(2.0) / 72.0  # score halves every 72 bins


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent, reproducible substream for ``(seed, *key)``.

    The same tuple always yields the same stream, and distinct tuples
    yield statistically independent streams, so per-batch and
    per-category draws can run in any order (or concurrently) without
    changing results.
    """
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return np.random.default_rng(tuple(int(x) for x in (seed, *key)))


@dataclass(frozen=True)
class SamplerConfig:
    """Knobs for the negative samplers.

    ``q`` future-time negatives per positive, drawn within ``t_f`` bins;
    batches of ``k`` positives; rejection loops abandon a draw after
    ``temporal_retry_cap`` / ``node_retry_cap`` attempts and tally the
    shortfall instead of looping forever.
    """

    q: int = 5
    t_f: int = 288
    k: int = 1000
    seed: int = 0
    temporal_retry_cap: int = 32
    node_retry_cap: int = 32

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if self.t_f < 1:
            raise ValueError("t_f must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.temporal_retry_cap < 1 or self.node_retry_cap < 1:
            raise ValueError("retry caps must be >= 1")


VALID_LOOP_POOL = ("batch", "per-t")
VALID_LOOP_EVAL = ("per-positive", "per-timestamp")


@dataclass
class PipelineConfig:
    """Resolved settings for a full experiment run."""

    dataset: str
    bin_width_seconds: int = DEFAULT_BIN_WIDTH_SECONDS
    batch_size: int = 1000
    q: int = 5
    t_f: int = 288
    seed: int = 0
    windows: str = "monthly"          # "monthly" or path to a windows JSON file
    val_fraction: float = 0.5
    loop_pool: str = "batch"
    loop_eval: str = "per-positive"
    strategies: tuple[str, ...] = ("dins",)
    scorer: str = "memory"
    scorer_lambda: float = DEFAULT_RECENCY_DECAY
    scorer_seed: int = 0
    scores_dir: Optional[str] = None
    columns: tuple[str, str, str] = ("src", "dst", "timestamp")
    drop_users: Optional[str] = None
    min_month_edges: int = 0

    def __post_init__(self):
        self.strategies = tuple(self.strategies)
        self.columns = tuple(self.columns)
        if self.bin_width_seconds <= 0:
            raise ValueError("bin_width_seconds must be positive")
        if not 0.0 <= self.val_fraction <= 1.0:
            raise ValueError("val_fraction must be in [0, 1]")
        if self.loop_pool not in VALID_LOOP_POOL:
            raise ValueError(f"loop_pool must be one of {VALID_LOOP_POOL}")
        if self.loop_eval not in VALID_LOOP_EVAL:
            raise ValueError(f"loop_eval must be one of {VALID_LOOP_EVAL}")
        if len(self.columns) != 3:
            raise ValueError("columns must name exactly (src, dst, timestamp)")
        if self.min_month_edges < 0:
            raise ValueError("min_month_edges must be non-negative")
        # delegate numeric checks
        self.sampler()

    def sampler(self) -> SamplerConfig:
        return SamplerConfig(q=self.q, t_f=self.t_f, k=self.batch_size, seed=self.seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["strategies"] = list(self.strategies)
        d["columns"] = list(self.columns)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {k: v for k, v in d.items() if k in known}
        if "strategies" in kwargs:
            kwargs["strategies"] = tuple(kwargs["strategies"])
        if "columns" in kwargs:
            kwargs["columns"] = tuple(kwargs["columns"])
        return cls(**kwargs)
