"""Continuous-time dynamic graph storage and history queries.

A graph is a directed temporal edge multiset over densely interned node
ids. Raw epoch timestamps are coarsened to integer bins of
``bin_width_seconds`` anchored at the earliest raw time seen, and the
edge arrays are kept stably sorted by bin (ties keep ingestion order).
:class:`HistoryIndex` layers the occurrence lookups that samplers and
scorers need (pair-at-time membership, prior-pair enumeration, loop
history) on top of sorted columnar arrays. Both structures are
immutable once built and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple, Optional

import numpy as np

__all__ = [
    "IngestError",
    "NodeRegistry",
    "Edge",
    "EdgeBlock",
    "DynamicGraph",
    "Batch",
    "HistoryIndex",
    "GraphStats",
    "build_graph",
    "subgraph",
    "batches",
    "stats",
]

_EMPTY_I64 = np.empty(0, dtype=np.int64)
_EMPTY_I64.setflags(write=False)


class IngestError(ValueError):
    """An edge record could not be ingested."""


class NodeRegistry:
    """Bijection between external node names and dense ids ``0..n-1``."""

    __slots__ = ("_names", "_ids")

    def __init__(self, names: Iterable[str] = ()):
        self._names: list[str] = []
        self._ids: dict[str, int] = {}
        for name in names:
            self.intern(name)

    def intern(self, name: str) -> int:
        """Return the id for ``name``, assigning the next free id if new."""
        nid = self._ids.get(name)
        if nid is None:
            nid = len(self._names)
            self._ids[name] = nid
            self._names.append(name)
        return nid

    def id_of(self, name: str) -> int:
        return self._ids[name]

    def get(self, name: str, default: Optional[int] = None) -> Optional[int]:
        return self._ids.get(name, default)

    def name_of(self, nid: int) -> str:
        return self._names[nid]

    def names(self) -> list[str]:
        return list(self._names)

    def __len__(self) -> int:
        return len(self._names)

    def __contains__(self, name: str) -> bool:
        return name in self._ids

    def __repr__(self) -> str:
        return f"NodeRegistry(n={len(self)})"


class Edge(NamedTuple):
    src: int
    dst: int
    t: int

    def is_loop(self) -> bool:
        return self.src == self.dst


@dataclass(frozen=True)
class EdgeBlock:
    """Parallel edge arrays without their own registry.

    Used for validation/test partitions of a split; ids refer to the
    registry of the training graph they were carved from.
    """

    src: np.ndarray
    dst: np.ndarray
    t: np.ndarray
    raw: np.ndarray

    def __len__(self) -> int:
        return int(self.src.size)

    @classmethod
    def empty(cls) -> "EdgeBlock":
        return cls(_EMPTY_I64, _EMPTY_I64, _EMPTY_I64, _EMPTY_I64)


def _owned_readonly(a, dtype=np.int64) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


class DynamicGraph:
    """Immutable directed temporal edge multiset.

    ``src``, ``dst``, ``t`` (bin) and ``raw`` (epoch seconds) are
    parallel read-only int64 arrays, stably sorted by bin. Duplicate
    records are kept; they are distinct members of the multiset.
    """

    def __init__(self, registry: NodeRegistry, src, dst, t, raw,
                 bin_width_seconds: int, raw_anchor: int):
        self.registry = registry
        self.src = _owned_readonly(src)
        self.dst = _owned_readonly(dst)
        self.t = _owned_readonly(t)
        self.raw = _owned_readonly(raw)
        self.bin_width_seconds = int(bin_width_seconds)
        self.raw_anchor = int(raw_anchor)
        m = self.src.size
        if not (self.dst.size == self.t.size == self.raw.size == m):
            raise ValueError("edge arrays must have equal length")
        if m and not (np.diff(self.t) >= 0).all():
            raise ValueError("edges must be sorted by bin")

    @property
    def n(self) -> int:
        return len(self.registry)

    @property
    def m(self) -> int:
        return int(self.src.size)

    @property
    def t_max(self) -> int:
        return int(self.t[-1]) if self.m else 0

    def edges(self) -> Iterator[Edge]:
        for i in range(self.m):
            yield Edge(int(self.src[i]), int(self.dst[i]), int(self.t[i]))

    @cached_property
    def history(self) -> "HistoryIndex":
        return HistoryIndex(self.src, self.dst, self.t, self.n)

    def __repr__(self) -> str:
        return (f"DynamicGraph(n={self.n}, m={self.m}, t_max={self.t_max}, "
                f"bin_width={self.bin_width_seconds}s)")


def build_graph(records: Iterable[tuple], bin_width_seconds: int = 300) -> DynamicGraph:
    """Build a graph from ``(src_name, dst_name, raw_epoch_seconds)`` records.

    Names are interned to dense ids in first-appearance order (source
    before destination within a record). Each raw time is mapped to
    ``(raw - min(raw)) // bin_width_seconds`` and edges are stably
    sorted by the resulting bin.
    """
    if bin_width_seconds <= 0:
        raise ValueError("bin_width_seconds must be positive")
    registry = NodeRegistry()
    srcs: list[int] = []
    dsts: list[int] = []
    raws: list[int] = []
    for i, rec in enumerate(records, start=1):
        try:
            s, d, raw = rec
        except (TypeError, ValueError):
            raise IngestError(f"record {i}: expected (src, dst, timestamp)") from None
        if s is None or d is None or s == "" or d == "":
            raise IngestError(f"record {i}: missing node name")
        try:
            raw = int(raw)
        except (TypeError, ValueError):
            raise IngestError(f"record {i}: timestamp {raw!r} is not an integer") from None
        if raw < 0:
            raise IngestError(f"record {i}: negative timestamp {raw}")
        srcs.append(registry.intern(str(s)))
        dsts.append(registry.intern(str(d)))
        raws.append(raw)
    if not srcs:
        return DynamicGraph(registry, _EMPTY_I64, _EMPTY_I64, _EMPTY_I64,
                            _EMPTY_I64, bin_width_seconds, 0)
    raw_arr = np.asarray(raws, dtype=np.int64)
    anchor = int(raw_arr.min())
    bins = (raw_arr - anchor) // bin_width_seconds
    order = np.argsort(bins, kind="stable")
    src_arr = np.asarray(srcs, dtype=np.int64)[order]
    dst_arr = np.asarray(dsts, dtype=np.int64)[order]
    return DynamicGraph(registry, src_arr, dst_arr, bins[order], raw_arr[order],
                        bin_width_seconds, anchor)


def subgraph(parent: DynamicGraph, indices: np.ndarray) -> tuple[DynamicGraph, np.ndarray]:
    """Restriction of ``parent`` to the given edge indices.

    Node ids are re-interned densely in first-appearance order over the
    selected records, and bins are recomputed from the selection's own
    earliest raw time. Returns the new graph together with a
    parent-id -> new-id map (-1 for nodes outside the selection).
    """
    indices = np.asarray(indices, dtype=np.int64)
    new_of_old = np.full(parent.n, -1, dtype=np.int64)
    if indices.size == 0:
        return (DynamicGraph(NodeRegistry(), _EMPTY_I64, _EMPTY_I64, _EMPTY_I64,
                             _EMPTY_I64, parent.bin_width_seconds, 0), new_of_old)
    s = parent.src[indices]
    d = parent.dst[indices]
    raw = parent.raw[indices]
    seq = np.empty(2 * indices.size, dtype=np.int64)
    seq[0::2] = s
    seq[1::2] = d
    uniq, first_pos = np.unique(seq, return_index=True)
    old_of_new = uniq[np.argsort(first_pos, kind="stable")]
    new_of_old[old_of_new] = np.arange(old_of_new.size, dtype=np.int64)
    registry = NodeRegistry(parent.registry.name_of(int(o)) for o in old_of_new)
    anchor = int(raw.min())
    bins = (raw - anchor) // parent.bin_width_seconds
    order = np.argsort(bins, kind="stable")
    g = DynamicGraph(registry, new_of_old[s][order], new_of_old[d][order],
                     bins[order], raw[order], parent.bin_width_seconds, anchor)
    return g, new_of_old


@dataclass
class Batch:
    """Contiguous slice of a graph's sorted edge list."""

    index: int
    start: int
    src: np.ndarray
    dst: np.ndarray
    t: np.ndarray

    def __len__(self) -> int:
        return int(self.src.size)

    @property
    def t_min(self) -> int:
        return int(self.t[0])

    @property
    def t_max(self) -> int:
        return int(self.t[-1])

    @cached_property
    def timestamps(self) -> np.ndarray:
        """Distinct bins occurring in this batch, ascending."""
        return np.unique(self.t)


def batches(graph: DynamicGraph, k: int) -> list[Batch]:
    """Split the sorted edge list into contiguous batches of size ``k``.

    Batch ``b`` covers edge positions ``[b*k, min((b+1)*k, m))``; the
    last batch may be short. Batches never realign to bin boundaries.
    """
    if k < 1:
        raise ValueError("batch size must be >= 1")
    out = []
    for b in range(0, (graph.m + k - 1) // k):
        lo = b * k
        hi = min(lo + k, graph.m)
        out.append(Batch(index=b, start=lo, src=graph.src[lo:hi],
                         dst=graph.dst[lo:hi], t=graph.t[lo:hi]))
    return out


class HistoryIndex:
    """Occurrence lookups over a fixed edge multiset.

    Edges are regrouped pair-major: ``_pair_keys`` holds the distinct
    directed pairs (encoded ``src * n + dst``, sorted) and
    ``_ts_by_pair`` their occurrence bins grouped per pair and sorted
    within each group. Prior-pair and loop history are kept ordered by
    first occurrence, so "strictly before t" queries reduce to a binary
    search plus a prefix length.
    """

    def __init__(self, src, dst, t, n_nodes: int):
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        t = np.asarray(t, dtype=np.int64)
        self.n_nodes = int(n_nodes)
        self.n_edges = int(src.size)
        n = max(self.n_nodes, 1)
        self._enc_n = n

        key = src * n + dst
        order = np.lexsort((t, key))
        keys_sorted = key[order]
        self._ts_by_pair = np.ascontiguousarray(t[order])
        self._pair_keys, starts = np.unique(keys_sorted, return_index=True)
        self._offsets = np.empty(self._pair_keys.size + 1, dtype=np.int64)
        self._offsets[:-1] = starts
        self._offsets[-1] = keys_sorted.size
        # Row of each edge's pair in the pair table, back in edge order;
        # powers vectorized batch-membership scans.
        self._edge_rows = np.empty(self.n_edges, dtype=np.int64)
        self._edge_rows[order] = self._pair_keys.searchsorted(keys_sorted)

        # Joint (pair, bin) membership array for vectorized queries.
        # keys_sorted is pair-major with bins ascending inside each pair,
        # so key*span + t is globally sorted. Falls back to scalar
        # lookups if the encoding would overflow int64.
        if self.n_edges:
            span = int(self._ts_by_pair.max()) + 1
            self._span = span
            if (int(self._pair_keys[-1]) + 1) * span < 2 ** 62:
                self._combo: Optional[np.ndarray] = keys_sorted * span + self._ts_by_pair
            else:
                self._combo = None
        else:
            self._span = 1
            self._combo = _EMPTY_I64
        # The unchecked fast path may encode pairs that never occur, so
        # it needs the full n*n key range to fit, not just observed keys.
        self._fast_ok = (self._combo is not None
                         and n * n * self._span < 2 ** 62)

        # Distinct pairs ordered by first occurrence.
        first_t = (self._ts_by_pair[self._offsets[:-1]]
                   if self._pair_keys.size else _EMPTY_I64)
        ford = np.argsort(first_t, kind="stable")
        self._pair_first_t = first_t[ford]
        self._pair_by_first = self._pair_keys[ford]

        # Loop history: key == u*(n+1) exactly when src == dst == u.
        if self.n_nodes:
            loop_rows = np.flatnonzero(self._pair_keys % (n + 1) == 0)
            loop_nodes = self._pair_keys[loop_rows] // (n + 1)
            loop_first = first_t[loop_rows]
            lord = np.argsort(loop_first, kind="stable")
            self._loop_first_t = loop_first[lord]
            self._loop_nodes_by_first = loop_nodes[lord]
            never = np.ones(self.n_nodes, dtype=bool)
            never[loop_nodes] = False
            self._never_looped = np.flatnonzero(never).astype(np.int64)
        else:
            self._loop_first_t = _EMPTY_I64
            self._loop_nodes_by_first = _EMPTY_I64
            self._never_looped = _EMPTY_I64

    # -- pair occurrence ------------------------------------------------

    def _pair_row(self, u: int, v: int) -> int:
        key = u * self._enc_n + v
        keys = self._pair_keys
        i = keys.searchsorted(key)
        if i == keys.size or keys[i] != key:
            return -1
        return i

    def pair_times(self, u: int, v: int) -> np.ndarray:
        """Sorted bins at which the directed pair occurs (empty if never)."""
        i = self._pair_row(u, v)
        if i < 0:
            return _EMPTY_I64
        return self._ts_by_pair[self._offsets[i]:self._offsets[i + 1]]

    @property
    def n_pairs(self) -> int:
        return int(self._pair_keys.size)

    @property
    def edge_pair_rows(self) -> np.ndarray:
        """Pair-table row of every edge, in original edge order."""
        return self._edge_rows

    def window_slices(self, us, vs, los, his) -> list[np.ndarray]:
        """Occurrence bins of each (u_i, v_i) within [lo_i, hi_i], per row.

        Returns one sorted (possibly repeating) bin array per input row;
        pairs that never occur inside their window yield empty arrays.
        The lookups are batched into two binary searches over the joint
        (pair, bin) array when that encoding is available.
        """
        us = np.asarray(us, dtype=np.int64)
        vs = np.asarray(vs, dtype=np.int64)
        los = np.asarray(los, dtype=np.int64)
        his = np.asarray(his, dtype=np.int64)
        k = us.size
        if k == 0 or self.n_edges == 0:
            return [_EMPTY_I64] * k
        if self._combo is None:
            out = []
            for i in range(k):
                ts = self.pair_times(int(us[i]), int(vs[i]))
                a = ts.searchsorted(los[i], "left")
                b = ts.searchsorted(his[i], "right")
                out.append(ts[a:b])
            return out
        keys = us * self._enc_n + vs
        rows = np.minimum(self._pair_keys.searchsorted(keys),
                          self._pair_keys.size - 1)
        ok = (self._pair_keys[rows] == keys) & (los <= his) & (his >= 0)
        base = np.where(ok, keys, 0) * self._span
        # lo clips to span (one past the pair's block) so windows that
        # start beyond the last bin come back empty, never widened
        a = self._combo.searchsorted(base + np.clip(los, 0, self._span), "left")
        b = self._combo.searchsorted(base + np.clip(his, 0, self._span - 1), "right")
        ts = self._ts_by_pair
        ok_l, a_l, b_l = ok.tolist(), a.tolist(), b.tolist()
        return [ts[a_l[i]:b_l[i]] if ok_l[i] else _EMPTY_I64 for i in range(k)]

    def has_pair(self, u: int, v: int) -> bool:
        return self._pair_row(u, v) >= 0

    def pair_occurred(self, u: int, v: int, t: int) -> bool:
        """True iff the directed edge (u, v, t) is in the multiset."""
        ts = self.pair_times(u, v)
        j = ts.searchsorted(t)
        return j < ts.size and ts[j] == t

    def pair_occurred_before(self, u: int, v: int, t: int) -> bool:
        """True iff (u, v) occurs at some bin strictly before ``t``."""
        ts = self.pair_times(u, v)
        return ts.size > 0 and int(ts[0]) < t

    def last_occurrence_at_or_before(self, u: int, v: int, t: int) -> Optional[int]:
        ts = self.pair_times(u, v)
        j = int(np.searchsorted(ts, t, side="right"))
        return int(ts[j - 1]) if j else None

    def occurred_fast(self, us: np.ndarray, vs: np.ndarray,
                      ts: np.ndarray) -> np.ndarray:
        """:meth:`occurred_many` for trusted inputs on the hot path.

        Callers must pass int64 arrays with node ids in [0, n) and bins
        in [0, span); falls back to the checked variant when the joint
        encoding cannot cover the full key range.
        """
        if not self._fast_ok or self.n_edges == 0:
            return self.occurred_many(us, vs, ts)
        keys = (us * self._enc_n + vs) * self._span + ts
        pos = self._combo.searchsorted(keys)
        np.minimum(pos, self._combo.size - 1, out=pos)
        return self._combo[pos] == keys

    def occurred_many(self, us, vs, ts) -> np.ndarray:
        """Vectorized :meth:`pair_occurred` over parallel arrays."""
        us = np.asarray(us, dtype=np.int64)
        vs = np.asarray(vs, dtype=np.int64)
        ts = np.asarray(ts, dtype=np.int64)
        out = np.zeros(us.size, dtype=bool)
        if us.size == 0 or self.n_edges == 0:
            return out
        if self._combo is not None:
            valid = (ts >= 0) & (ts < self._span)
            if not valid.any():
                return out
            q = ((us[valid] * self._enc_n + vs[valid]) * self._span + ts[valid])
            pos = np.searchsorted(self._combo, q)
            safe = np.minimum(pos, self._combo.size - 1)
            out[valid] = (pos < self._combo.size) & (self._combo[safe] == q)
            return out
        for i in range(us.size):
            out[i] = self.pair_occurred(int(us[i]), int(vs[i]), int(ts[i]))
        return out

    def pairs_exist(self, us, vs) -> np.ndarray:
        """Vectorized :meth:`has_pair` over parallel arrays."""
        us = np.asarray(us, dtype=np.int64)
        vs = np.asarray(vs, dtype=np.int64)
        out = np.zeros(us.size, dtype=bool)
        if us.size == 0 or self._pair_keys.size == 0:
            return out
        keys = us * self._enc_n + vs
        pos = np.searchsorted(self._pair_keys, keys)
        safe = np.minimum(pos, self._pair_keys.size - 1)
        return (pos < self._pair_keys.size) & (self._pair_keys[safe] == keys)

    # -- prior pairs (for the historical baseline) ----------------------

    def prior_pair_count(self, t: int) -> int:
        """Number of distinct directed pairs first seen strictly before ``t``."""
        return int(np.searchsorted(self._pair_first_t, t, side="left"))

    def prior_pair_counts(self, ts) -> np.ndarray:
        return np.searchsorted(self._pair_first_t, np.asarray(ts, dtype=np.int64),
                               side="left")

    def prior_pair(self, rank: int) -> tuple[int, int]:
        """The ``rank``-th distinct pair in order of first occurrence."""
        key = int(self._pair_by_first[rank])
        return key // self._enc_n, key % self._enc_n

    # -- loop history ----------------------------------------------------

    def loopless_count(self, before_t: int) -> int:
        """Size of the pool of nodes with no self-loop strictly before ``before_t``."""
        j = int(np.searchsorted(self._loop_first_t, before_t, side="left"))
        return int(self._never_looped.size + (self._loop_first_t.size - j))

    def loopless_nodes(self, before_t: int) -> np.ndarray:
        """Nodes with no self-loop strictly before ``before_t``, ascending."""
        j = int(np.searchsorted(self._loop_first_t, before_t, side="left"))
        return np.sort(np.concatenate([self._never_looped,
                                       self._loop_nodes_by_first[j:]]))

    def pick_loopless(self, rng: np.random.Generator, before_t: int, size: int) -> np.ndarray:
        """Uniform draws (with replacement) from the loopless pool."""
        j = int(np.searchsorted(self._loop_first_t, before_t, side="left"))
        later = self._loop_nodes_by_first[j:]
        n0 = self._never_looped.size
        total = n0 + later.size
        if total == 0:
            raise ValueError("loopless pool is empty")
        ranks = rng.integers(0, total, size=size)
        out = np.empty(size, dtype=np.int64)
        lo = ranks < n0
        if n0:
            out[lo] = self._never_looped[ranks[lo]]
        out[~lo] = later[ranks[~lo] - n0]
        return out


@dataclass(frozen=True)
class GraphStats:
    """Summary statistics of a graph, JSON-serializable via ``asdict``."""

    n_nodes: int
    n_edges: int
    unique_directed_pairs: int
    distinct_nonloop_pairs: int
    loop_count: int
    unique_pair_fraction: float
    loop_fraction: float
    start_date: Optional[str]
    end_date: Optional[str]


def _utc_date(epoch_seconds: int) -> str:
    return datetime.fromtimestamp(int(epoch_seconds), tz=timezone.utc).date().isoformat()


def stats(graph: DynamicGraph) -> GraphStats:
    """Node/edge/pair/loop counts plus the UTC date span of the raw times.

    ``unique_directed_pairs`` counts distinct ordered pairs including
    self-loop pairs; ``distinct_nonloop_pairs`` excludes them, so either
    reading of "unique pairs" is available. Fractions are relative to
    the edge count and reported as 0 for an empty graph.
    """
    m = graph.m
    if m == 0:
        return GraphStats(graph.n, 0, 0, 0, 0, 0.0, 0.0, None, None)
    key = graph.src * np.int64(graph.n) + graph.dst
    unique_pairs = int(np.unique(key).size)
    nonloop = graph.src != graph.dst
    loop_count = int(m - nonloop.sum())
    nonloop_pairs = int(np.unique(key[nonloop]).size)
    return GraphStats(
        n_nodes=graph.n,
        n_edges=m,
        unique_directed_pairs=unique_pairs,
        distinct_nonloop_pairs=nonloop_pairs,
        loop_count=loop_count,
        unique_pair_fraction=unique_pairs / m,
        loop_fraction=loop_count / m,
        start_date=_utc_date(graph.raw.min()),
        end_date=_utc_date(graph.raw.max()),
    )
