"""Negative sampling strategies over batches of a dynamic graph.

Implements two widely used baselines (random destination replacement,
historical pair reuse) and the domain-informed strategies: sender and
receiver replacement, future-time probes for pairs that are known to
repeat, and negative self-loops drawn from nodes that have never posted
to themselves. ``sample_dins`` chains them per batch and tops the batch
up with observed future recurrences of its pairs (positive
enhancement).

All strategies are pure functions of ``(batch, graph, config, rng)``:
they never mutate the graph, and every emitted negative is checked to
be absent from the edge multiset at its timestamp. Draws that cannot be
satisfied within the configured retry caps are dropped and tallied, not
raised. Feed each batch the substream from :func:`batch_rng` so batches
can be sampled independently (even concurrently) and merged in batch
order with reproducible results.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .config import SamplerConfig, derive_rng
from .graph import Batch, DynamicGraph, HistoryIndex, batches

# sample labels
POS = "pos"
NEG = "neg"

# sample categories (generation mechanism)
OBSERVED = "observed"
RANDOM_RECEIVER = "random_receiver"
RANDOM_SENDER = "random_sender"
HISTORICAL = "historical"
TEMPORAL = "temporal"
NEGATIVE_LOOP = "negative_loop"
POSITIVE_ENHANCEMENT = "positive_enhancement"

CATEGORIES = (OBSERVED, RANDOM_RECEIVER, RANDOM_SENDER, HISTORICAL,
              TEMPORAL, NEGATIVE_LOOP, POSITIVE_ENHANCEMENT)


class Sample(NamedTuple):
    src: int
    dst: int
    t: int
    label: str
    category: str


@dataclass
class SampleSet:
    """Ordered samples produced from one batch, plus bookkeeping tallies.

    Tally keys: ``skipped`` (random baseline pool/retry failures),
    ``sender_skipped`` / ``receiver_skipped``, ``temporal_shortfall``,
    ``loop_shortfall``, ``historical_fallback``.
    """

    samples: list[Sample]
    origin_batch: int = 0
    tallies: Counter = field(default_factory=Counter)

    def __len__(self) -> int:
        return len(self.samples)

    def count(self, category: str) -> int:
        return sum(1 for s in self.samples if s.category == category)

    def by_category(self) -> Counter:
        return Counter(s.category for s in self.samples)


def batch_rng(seed: int, batch_index: int) -> np.random.Generator:
    """The dedicated random substream for one batch."""
    return derive_rng(seed, batch_index)


# -- node replacement draws ----------------------------------------------


def _draw_one_replacement(rng: np.random.Generator, n: int, u: int, v: int) -> int:
    """Uniform draw from V minus {u, v} (V minus {u} when u == v); -1 if empty."""
    same = u == v
    pool = n - 1 if same else n - 2
    if pool <= 0:
        return -1
    x = int(rng.integers(0, pool))
    lo, hi = (u, v) if u <= v else (v, u)
    if x >= lo:
        x += 1
    if not same and x >= hi:
        x += 1
    return x


def _draw_replacements_vec(rng: np.random.Generator, n: int,
                           us: np.ndarray, vs: np.ndarray) -> np.ndarray:
    """One replacement draw per row; -1 where the candidate pool is empty.

    Loop rows (u == v) exclude one node, other rows two, so each group
    draws with its own scalar bound and the draw is unfolded past the
    excluded node ids to stay uniform over the remaining pool.
    """
    k = us.size
    same = us == vs
    draws = np.full(k, -1, dtype=np.int64)
    x = np.zeros(k, dtype=np.int64)
    if n >= 2:
        loops = np.flatnonzero(same)
        if loops.size:
            x[loops] = rng.integers(0, n - 1, size=loops.size)
            draws[loops] = 0
    if n >= 3:
        plain = np.flatnonzero(~same)
        if plain.size:
            x[plain] = rng.integers(0, n - 2, size=plain.size)
            draws[plain] = 0
    ok = draws == 0
    lo = np.minimum(us, vs)
    hi = np.maximum(us, vs)
    y = x + (x >= lo)
    y += (y >= hi) & ~same
    draws[ok] = y[ok]
    return draws


def _redraw_nonedge(rng: np.random.Generator, index: HistoryIndex, n: int,
                    u: int, v: int, t: int, replace_dst: bool, cap: int) -> int:
    """Replacement draw rejected while (u,r,t) resp. (r,v,t) is an edge."""
    for _ in range(cap):
        r = _draw_one_replacement(rng, n, u, v)
        if r < 0:
            return -1
        if replace_dst:
            if not index.pair_occurred(u, r, t):
                return r
        else:
            if not index.pair_occurred(r, v, t):
                return r
    return -1


def _replacement_column(rng: np.random.Generator, index: HistoryIndex, n: int,
                        src: np.ndarray, dst: np.ndarray, ts: np.ndarray,
                        replace_dst: bool, cap: int) -> np.ndarray:
    """Vectorized replacement draws with scalar retry fix-ups.

    Returns one candidate per row, or -1 where the pool was empty or the
    retry cap was exhausted while every draw collided with an edge.
    """
    r = _draw_replacements_vec(rng, n, src, dst)
    sel = np.flatnonzero(r >= 0)
    if sel.size:
        if replace_dst:
            exists = index.occurred_fast(src[sel], r[sel], ts[sel])
        else:
            exists = index.occurred_fast(r[sel], dst[sel], ts[sel])
        for i in sel[exists]:
            r[i] = _redraw_nonedge(rng, index, n, int(src[i]), int(dst[i]),
                                   int(ts[i]), replace_dst, cap)
    return r


# -- individual strategies -------------------------------------------------


def sample_random_baseline(batch: Batch, graph: DynamicGraph,
                           config: SamplerConfig, rng: np.random.Generator) -> SampleSet:
    """One negative per positive with the destination replaced at random.

    For each positive (u, v, t), draw r uniformly from V minus {u, v}
    and emit (u, r, t) once it is not an edge; give up after
    ``node_retry_cap`` attempts and count the positive under
    ``skipped``.
    """
    tallies: Counter = Counter()
    out: list[Sample] = []
    if len(batch) == 0:
        return SampleSet(out, batch.index, tallies)
    r = _replacement_column(rng, graph.history, graph.n, batch.src, batch.dst,
                            batch.t, True, config.node_retry_cap)
    for i in range(len(batch)):
        if r[i] < 0:
            tallies["skipped"] += 1
            continue
        out.append(Sample(int(batch.src[i]), int(r[i]), int(batch.t[i]),
                          NEG, RANDOM_RECEIVER))
    return SampleSet(out, batch.index, tallies)


def sample_historical_baseline(batch: Batch, graph: DynamicGraph,
                               config: SamplerConfig, rng: np.random.Generator) -> SampleSet:
    """One negative per positive reusing a pair seen strictly earlier.

    For a positive at time t, draw (u', v') uniformly from the distinct
    directed pairs whose first occurrence is strictly before t, and emit
    (u', v', t) provided it is not itself an edge. When no prior pair
    exists (or every draw collides within the retry cap), fall back to
    the random baseline for that positive and count it under
    ``historical_fallback``.
    """
    idx = graph.history
    tallies: Counter = Counter()
    out: list[Sample] = []
    if len(batch) == 0:
        return SampleSet(out, batch.index, tallies)
    counts = idx.prior_pair_counts(batch.t)
    cap = config.node_retry_cap
    for i in range(len(batch)):
        u, v, t = int(batch.src[i]), int(batch.dst[i]), int(batch.t[i])
        c = int(counts[i])
        emitted = False
        if c > 0:
            for _ in range(cap):
                u2, v2 = idx.prior_pair(int(rng.integers(0, c)))
                if not idx.pair_occurred(u2, v2, t):
                    out.append(Sample(u2, v2, t, NEG, HISTORICAL))
                    emitted = True
                    break
        if not emitted:
            tallies["historical_fallback"] += 1
            r = _redraw_nonedge(rng, idx, graph.n, u, v, t, True, cap)
            if r < 0:
                tallies["skipped"] += 1
            else:
                out.append(Sample(u, r, t, NEG, RANDOM_RECEIVER))
    return SampleSet(out, batch.index, tallies)


def sample_sender_receiver(batch: Batch, graph: DynamicGraph,
                           config: SamplerConfig, rng: np.random.Generator) -> SampleSet:
    """Two negatives per positive: replaced sender, then replaced receiver.

    For each positive (u, v, t) emit (r_s, v, t) and (u, r_d, t) with
    r_s, r_d drawn uniformly from V minus {u, v}, re-drawn while the
    candidate triple is an edge. Skipped slots are tallied under
    ``sender_skipped`` / ``receiver_skipped``.
    """
    tallies: Counter = Counter()
    out: list[Sample] = []
    if len(batch) == 0:
        return SampleSet(out, batch.index, tallies)
    idx = graph.history
    cap = config.node_retry_cap
    senders = _replacement_column(rng, idx, graph.n, batch.src, batch.dst,
                                  batch.t, False, cap)
    receivers = _replacement_column(rng, idx, graph.n, batch.src, batch.dst,
                                    batch.t, True, cap)
    for i in range(len(batch)):
        u, v, t = int(batch.src[i]), int(batch.dst[i]), int(batch.t[i])
        if senders[i] >= 0:
            out.append(Sample(int(senders[i]), v, t, NEG, RANDOM_SENDER))
        else:
            tallies["sender_skipped"] += 1
        if receivers[i] >= 0:
            out.append(Sample(u, int(receivers[i]), t, NEG, RANDOM_RECEIVER))
        else:
            tallies["receiver_skipped"] += 1
    return SampleSet(out, batch.index, tallies)


def _complement_bins(lo: int, hi: int, occupied: list[int]) -> list[int]:
    """Bins in [lo, hi] not present in the sorted ``occupied`` list."""
    out: list[int] = []
    prev = lo
    for x in occupied:
        out.extend(range(prev, x))
        prev = x + 1
    out.extend(range(prev, hi + 1))
    return out


def _temporal_for_edge(u: int, v: int, t: int, hi: int, q: int, cap: int,
                       rng: np.random.Generator, out: list[Sample],
                       occ: np.ndarray, cand: list[float]) -> int:
    """Append up to q future-time negatives for one positive; return shortfall.

    Candidate bins are the integers in [t, hi] minus ``occ`` — the
    pair's own occurrence bins inside that window (the positive itself
    always occupies t). When at most q candidates exist they are all
    emitted (ascending); otherwise distinct bins are rejection-sampled:
    first from the pre-drawn uniforms in ``cand``, then in rounds under
    the retry cap.
    """
    if hi < t:
        return q
    occupied = set(occ.tolist())   # the same bin may recur in the multiset
    avail = (hi - t + 1) - len(occupied)
    if avail <= 0:
        return q
    if avail <= q:
        for tn in _complement_bins(t, hi, sorted(occupied)):
            out.append(Sample(u, v, tn, NEG, TEMPORAL))
        return q - avail
    # avail > q: rejection-sample distinct bins
    drawn: set[int] = set()
    width = hi - t + 1
    for f in cand:
        tn = t + int(f * width)
        if tn in occupied or tn in drawn:
            continue
        drawn.add(tn)
        out.append(Sample(u, v, tn, NEG, TEMPORAL))
    need = q - len(drawn)
    for _ in range(cap - 1):
        if need == 0:
            break
        for tn in rng.integers(t, hi + 1, size=need).tolist():
            if tn in occupied or tn in drawn:
                continue
            drawn.add(tn)
            out.append(Sample(u, v, tn, NEG, TEMPORAL))
        need = q - len(drawn)
    return need


def sample_temporal(batch: Batch, graph: DynamicGraph,
                    config: SamplerConfig, rng: np.random.Generator) -> SampleSet:
    """Up to q same-pair negatives per positive at unused future bins.

    For each positive (u, v, t), future bins are drawn uniformly from
    [t, min(t + t_f, max bin of the batch)], pairwise distinct within
    the positive, and only at bins where (u, v) never occurs. Unfillable
    slots are counted under ``temporal_shortfall``, so
    emitted + shortfall == q per positive.
    """
    tallies: Counter = Counter()
    out: list[Sample] = []
    if len(batch) == 0:
        return SampleSet(out, batch.index, tallies)
    idx = graph.history
    t_hi = batch.t_max
    shortfall = 0
    q, rcap = config.q, config.temporal_retry_cap
    his = np.minimum(batch.t + config.t_f, t_hi)
    occ_slices = idx.window_slices(batch.src, batch.dst, batch.t, his)
    src_l, dst_l, t_l = batch.src.tolist(), batch.dst.tolist(), batch.t.tolist()
    hi_l = his.tolist()
    u01 = rng.random(q * len(batch)).tolist()   # q candidates per positive
    for i in range(len(batch)):
        shortfall += _temporal_for_edge(src_l[i], dst_l[i], t_l[i], hi_l[i],
                                        q, rcap, rng, out, occ_slices[i],
                                        u01[i * q:(i + 1) * q])
    if shortfall:
        tallies["temporal_shortfall"] = shortfall
    return SampleSet(out, batch.index, tallies)


def _loop_block(batch: Batch, idx: HistoryIndex, rng: np.random.Generator,
                cap: int, pool_mode: str) -> tuple[list[Sample], int]:
    """One negative self-loop per distinct batch timestamp, plus shortfall.

    ``pool_mode="batch"`` draws every loop from the pool of nodes with
    no self-loop strictly before the batch's first timestamp, computed
    once per batch; ``"per-t"`` recomputes the pool before each
    timestamp. Draws colliding with an actual self-loop are retried up
    to ``cap`` times.
    """
    ts = batch.timestamps
    out: list[Sample] = []
    shortfall = 0
    if pool_mode == "batch":
        before = batch.t_min
        if idx.loopless_count(before) == 0:
            return out, int(ts.size)
        picks = idx.pick_loopless(rng, before, ts.size)
        exists = idx.occurred_fast(picks, picks, ts).tolist()
        picks_l, ts_l = picks.tolist(), ts.tolist()
        for i in range(len(ts_l)):
            r, t = picks_l[i], ts_l[i]
            if exists[i]:
                r = _retry_loop_pick(idx, rng, before, t, cap)
            if r < 0:
                shortfall += 1
            else:
                out.append(Sample(r, r, t, NEG, NEGATIVE_LOOP))
    elif pool_mode == "per-t":
        for t in ts.tolist():
            if idx.loopless_count(t) == 0:
                shortfall += 1
                continue
            r = int(idx.pick_loopless(rng, t, 1)[0])
            if idx.pair_occurred(r, r, t):
                r = _retry_loop_pick(idx, rng, t, t, cap)
            if r < 0:
                shortfall += 1
            else:
                out.append(Sample(r, r, int(t), NEG, NEGATIVE_LOOP))
    else:
        raise ValueError(f"unknown pool_mode {pool_mode!r}")
    return out, shortfall


def _retry_loop_pick(idx: HistoryIndex, rng: np.random.Generator,
                     before: int, t: int, cap: int) -> int:
    for _ in range(cap):
        r = int(idx.pick_loopless(rng, before, 1)[0])
        if not idx.pair_occurred(r, r, t):
            return r
    return -1


def sample_negative_loops(batch: Batch, graph: DynamicGraph,
                          config: SamplerConfig, rng: np.random.Generator,
                          *, pool_mode: str = "batch") -> SampleSet:
    """One negative self-loop per distinct timestamp in the batch.

    Candidates come from the pool of nodes that have never formed a
    self-loop strictly before the batch's first timestamp (or before
    each timestamp with ``pool_mode="per-t"``); a draw is retried while
    (r, r, t) is an actual edge. An empty pool or exhausted retries add
    to ``loop_shortfall``.
    """
    tallies: Counter = Counter()
    if len(batch) == 0:
        return SampleSet([], batch.index, tallies)
    out, shortfall = _loop_block(batch, graph.history, rng,
                                 config.node_retry_cap, pool_mode)
    if shortfall:
        tallies["loop_shortfall"] = shortfall
    return SampleSet(out, batch.index, tallies)


def _enhancement(batch: Batch, graph: DynamicGraph, k: int) -> list[Sample]:
    """Earliest k edges after the batch whose pair occurred in the batch."""
    if k <= 0 or len(batch) == 0:
        return []
    start = int(graph.t.searchsorted(batch.t_max, "right"))
    if start >= graph.m:
        return []
    idx = graph.history
    rows = idx.edge_pair_rows
    in_batch = np.zeros(idx.n_pairs, dtype=bool)
    in_batch[rows[batch.start:batch.start + len(batch)]] = True
    hits = np.flatnonzero(in_batch[rows[start:]])
    if hits.size > k:
        hits = hits[:k]
    if hits.size == 0:
        return []
    hits += start
    return [Sample(s, d, t, POS, POSITIVE_ENHANCEMENT)
            for s, d, t in zip(graph.src[hits].tolist(),
                               graph.dst[hits].tolist(),
                               graph.t[hits].tolist())]


def positive_enhancement(batch: Batch, graph: DynamicGraph, k: int) -> SampleSet:
    """Extra positives: future recurrences of the batch's pairs.

    Scans edges with bins strictly after the batch's last bin, in global
    edge order, and emits those whose directed pair occurred inside the
    batch, stopping after ``k``. Purely deterministic; no randomness.
    """
    return SampleSet(_enhancement(batch, graph, k), batch.index, Counter())


def sample_dins(batch: Batch, graph: DynamicGraph, config: SamplerConfig,
                rng: np.random.Generator, *, pool_mode: str = "batch") -> SampleSet:
    """The combined per-batch pass chaining every targeted mechanism.

    Per positive (u, v, t), in batch order: a sender replacement, a
    receiver replacement, and up to q future-time negatives. Then one
    negative self-loop per distinct batch timestamp, and finally up to
    ``config.k`` positive-enhancement samples. With zero shortfalls a
    full batch of k' positives yields ``2*k' + q*k' + |timestamps|``
    negatives plus at most k extra positives.
    """
    tallies: Counter = Counter()
    if len(batch) == 0:
        return SampleSet([], batch.index, tallies)
    idx = graph.history
    cap = config.node_retry_cap
    senders = _replacement_column(rng, idx, graph.n, batch.src, batch.dst,
                                  batch.t, False, cap)
    receivers = _replacement_column(rng, idx, graph.n, batch.src, batch.dst,
                                    batch.t, True, cap)
    out: list[Sample] = []
    t_hi = batch.t_max
    temporal_shortfall = 0
    q, rcap = config.q, config.temporal_retry_cap
    his = np.minimum(batch.t + config.t_f, t_hi)
    occ_slices = idx.window_slices(batch.src, batch.dst, batch.t, his)
    src_l, dst_l, t_l = batch.src.tolist(), batch.dst.tolist(), batch.t.tolist()
    hi_l = his.tolist()
    senders_l, receivers_l = senders.tolist(), receivers.tolist()
    u01 = rng.random(q * len(batch)).tolist()   # q candidates per positive
    append = out.append
    for i in range(len(batch)):
        u, v, t = src_l[i], dst_l[i], t_l[i]
        if senders_l[i] >= 0:
            append(Sample(senders_l[i], v, t, NEG, RANDOM_SENDER))
        else:
            tallies["sender_skipped"] += 1
        if receivers_l[i] >= 0:
            append(Sample(u, receivers_l[i], t, NEG, RANDOM_RECEIVER))
        else:
            tallies["receiver_skipped"] += 1
        temporal_shortfall += _temporal_for_edge(u, v, t, hi_l[i], q, rcap,
                                                 rng, out, occ_slices[i],
                                                 u01[i * q:(i + 1) * q])
    if temporal_shortfall:
        tallies["temporal_shortfall"] = temporal_shortfall
    loops, loop_shortfall = _loop_block(batch, idx, rng, cap, pool_mode)
    out.extend(loops)
    if loop_shortfall:
        tallies["loop_shortfall"] = loop_shortfall
    out.extend(_enhancement(batch, graph, config.k))
    return SampleSet(out, batch.index, tallies)


STRATEGIES = {
    "random": sample_random_baseline,
    "historical": sample_historical_baseline,
    "sender_receiver": sample_sender_receiver,
    "temporal": sample_temporal,
    "loops": sample_negative_loops,
    "dins": sample_dins,
}

_POOLED = {"loops", "dins"}


def sample_batches(graph: DynamicGraph, strategy: str, config: SamplerConfig,
                   *, pool_mode: str = "batch",
                   include_positives: bool = False) -> Iterator[SampleSet]:
    """Run one strategy over every batch with per-batch substreams.

    Yields one :class:`SampleSet` per batch, in batch order. With
    ``include_positives`` each set is prefixed by the batch's own edges
    as observed positives (useful when exporting training files).
    """
    try:
        fn = STRATEGIES[strategy]
    except KeyError:
        raise ValueError(f"unknown strategy {strategy!r}; "
                         f"choose from {sorted(STRATEGIES)}") from None
    for batch in batches(graph, config.k):
        rng = batch_rng(config.seed, batch.index)
        if strategy in _POOLED:
            ss = fn(batch, graph, config, rng, pool_mode=pool_mode)
        else:
            ss = fn(batch, graph, config, rng)
        if include_positives:
            observed = [Sample(int(batch.src[i]), int(batch.dst[i]),
                               int(batch.t[i]), POS, OBSERVED)
                        for i in range(len(batch))]
            ss = SampleSet(observed + ss.samples, ss.origin_batch, ss.tallies)
        yield ss
