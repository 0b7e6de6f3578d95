"""Chronological train/eval splitting on calendar windows.

The default schedule is UTC calendar months covering the data span;
consecutive windows pair up as (train month i, eval month i+1). Custom
window files replace the whole schedule, which allows sub-month splits
for bursty periods. Splits are transductive: eval edges touching a node
unseen in the train window are dropped (and counted), and survivors are
divided chronologically into validation and test.

Within a split, bins are recomputed from the train window's own
earliest raw time, so a bin offset of 288 means 24 hours in every split
regardless of where the split sits in the dataset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Optional, Sequence

import numpy as np

from .graph import DynamicGraph, EdgeBlock, subgraph

__all__ = ["WindowSpec", "MonthlySplit", "monthly_schedule", "window_pairs",
           "make_split", "load_windows_file", "sparse_month_mask"]


@dataclass(frozen=True)
class WindowSpec:
    """Half-open raw-time window [start, end) in epoch seconds."""

    label: str
    start: int
    end: int

    def __post_init__(self):
        if self.end <= self.start:
            raise ValueError(f"window {self.label!r}: end must exceed start")

    def to_dict(self) -> dict:
        return {"label": self.label, "start": self.start, "end": self.end}


def _month_floor(epoch: int) -> tuple[int, int]:
    d = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
    return d.year, d.month

def _month_start_epoch(year: int, month: int) -> int:
    return int(datetime(year, month, 1, tzinfo=timezone.utc).timestamp())

def _next_month(year: int, month: int) -> tuple[int, int]:
    return (year + 1, 1) if month == 12 else (year, month + 1)


def monthly_schedule(graph: DynamicGraph,
                     custom_windows: Optional[Sequence[WindowSpec]] = None) -> list[WindowSpec]:
    """UTC calendar-month windows covering the graph's raw-time span.

    When ``custom_windows`` is given it replaces the monthly schedule
    entirely; windows must be chronological and non-overlapping.
    """
    if custom_windows is not None:
        ws = list(custom_windows)
        if not ws:
            raise ValueError("custom window list is empty")
        for a, b in zip(ws, ws[1:]):
            if b.start < a.end:
                raise ValueError(f"windows overlap or are out of order: "
                                 f"{a.label!r} and {b.label!r}")
        return ws
    if graph.m == 0:
        raise ValueError("cannot schedule windows for an empty graph")
    t_lo = int(graph.raw.min())
    t_hi = int(graph.raw.max())
    year, month = _month_floor(t_lo)
    out: list[WindowSpec] = []
    while _month_start_epoch(year, month) <= t_hi:
        ny, nm = _next_month(year, month)
        out.append(WindowSpec(label=f"{year:04d}-{month:02d}",
                              start=_month_start_epoch(year, month),
                              end=_month_start_epoch(ny, nm)))
        year, month = ny, nm
    return out


def window_pairs(windows: Sequence[WindowSpec]) -> list[tuple[WindowSpec, WindowSpec]]:
    """Consecutive (train, eval) pairs of a schedule."""
    return list(zip(windows[:-1], windows[1:]))


@dataclass
class MonthlySplit:
    """One transductive train/eval split.

    ``val`` and ``test`` use the node ids and bin anchor of ``train``;
    every raw time in ``train`` precedes every raw time in ``val`` and
    ``test`` because the windows do not overlap.
    """

    train_window: WindowSpec
    eval_window: WindowSpec
    train: DynamicGraph
    val: EdgeBlock
    test: EdgeBlock
    dropped_count: int
    val_fraction: float

    @property
    def label(self) -> str:
        return self.train_window.label


def make_split(graph: DynamicGraph, train_window: WindowSpec,
               eval_window: WindowSpec, val_fraction: float = 0.5) -> MonthlySplit:
    """Carve one transductive split out of ``graph``.

    The train graph is re-interned and re-anchored on its own window.
    Eval-window edges keep only those whose endpoints both appear in the
    train graph (the rest are counted in ``dropped_count``); survivors
    are sorted by bin and divided chronologically, the first
    ``val_fraction`` into validation and the remainder into test.
    """
    if not 0.0 <= val_fraction <= 1.0:
        raise ValueError("val_fraction must be in [0, 1]")
    if train_window.end > eval_window.start:
        raise ValueError(f"train window {train_window.label!r} must precede "
                         f"eval window {eval_window.label!r}")
    tr_idx = np.flatnonzero((graph.raw >= train_window.start)
                            & (graph.raw < train_window.end))
    if tr_idx.size == 0:
        raise ValueError(f"train window {train_window.label!r} selects no edges")
    train, new_of_old = subgraph(graph, tr_idx)

    ev_idx = np.flatnonzero((graph.raw >= eval_window.start)
                            & (graph.raw < eval_window.end))
    s = new_of_old[graph.src[ev_idx]]
    d = new_of_old[graph.dst[ev_idx]]
    keep = (s >= 0) & (d >= 0)
    dropped = int(ev_idx.size - keep.sum())
    s, d = s[keep], d[keep]
    raw = graph.raw[ev_idx][keep]
    bins = (raw - train.raw_anchor) // graph.bin_width_seconds
    order = np.argsort(bins, kind="stable")
    s, d, bins, raw = s[order], d[order], bins[order], raw[order]

    n_val = int(s.size * val_fraction)
    val = EdgeBlock(s[:n_val], d[:n_val], bins[:n_val], raw[:n_val])
    test = EdgeBlock(s[n_val:], d[n_val:], bins[n_val:], raw[n_val:])
    return MonthlySplit(train_window=train_window, eval_window=eval_window,
                        train=train, val=val, test=test, dropped_count=dropped,
                        val_fraction=val_fraction)


def _parse_boundary(value) -> int:
    """Window boundary: epoch seconds, or an ISO date taken as UTC midnight."""
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, str):
        try:
            d = datetime.strptime(value, "%Y-%m-%d")
        except ValueError:
            raise ValueError(f"bad window boundary {value!r}: "
                             "use epoch seconds or YYYY-MM-DD") from None
        return int(d.replace(tzinfo=timezone.utc).timestamp())
    raise ValueError(f"bad window boundary {value!r}")


def load_windows_file(path) -> list[WindowSpec]:
    """Read a custom window schedule from JSON.

    Accepts either a bare list or ``{"windows": [...]}``; each entry is
    ``{"label", "start", "end"}`` with boundaries in epoch seconds or
    ``YYYY-MM-DD`` (UTC midnight, end exclusive).
    """
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if isinstance(payload, dict):
        payload = payload.get("windows")
    if not isinstance(payload, list) or not payload:
        raise ValueError(f"{path}: expected a non-empty list of windows")
    out = []
    for i, w in enumerate(payload):
        try:
            out.append(WindowSpec(label=str(w["label"]),
                                  start=_parse_boundary(w["start"]),
                                  end=_parse_boundary(w["end"])))
        except KeyError as exc:
            raise ValueError(f"{path}: window {i} is missing {exc}") from None
    return out


def sparse_month_mask(raw_seconds: np.ndarray, min_edges: int) -> np.ndarray:
    """Keep-mask dropping edges in UTC months with fewer than ``min_edges``."""
    raw_seconds = np.asarray(raw_seconds, dtype=np.int64)
    if min_edges <= 1 or raw_seconds.size == 0:
        return np.ones(raw_seconds.size, dtype=bool)
    keys = np.array([ym[0] * 12 + ym[1] for ym in map(_month_floor, raw_seconds.tolist())],
                    dtype=np.int64)
    uniq, counts = np.unique(keys, return_counts=True)
    sparse = set(uniq[counts < min_edges].tolist())
    if not sparse:
        return np.ones(raw_seconds.size, dtype=bool)
    return np.array([k not in sparse for k in keys.tolist()], dtype=bool)
