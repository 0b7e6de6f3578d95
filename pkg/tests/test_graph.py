"""Graph construction, binning, batching, and the history index."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dins import (DynamicGraph, IngestError, NodeRegistry, batches,
                  build_graph, stats, subgraph)
from dins.config import derive_rng
from dins.graph import HistoryIndex

from conftest import (first_seen_map, graphs, loop_first_map, pair_times_map,
                      record_lists, triple_set)


# -- construction ---------------------------------------------------------------


def test_build_graph_bins_and_sorts():
    # raw seconds 600, 0, 950 at 300s bins -> bins 2, 0, 3 after sorting
    g = build_graph([("alice", "bob", 600), ("bob", "carol", 0),
                     ("alice", "bob", 950)])
    assert g.t.tolist() == [0, 2, 3]
    assert g.raw.tolist() == [0, 600, 950]
    # ids follow first appearance in ingestion order: alice=0, bob=1, carol=2
    assert g.registry.names() == ["alice", "bob", "carol"]
    assert g.src.tolist() == [1, 0, 0]
    assert g.dst.tolist() == [2, 1, 1]
    assert g.raw_anchor == 0 and g.bin_width_seconds == 300
    assert g.n == 3 and g.m == 3 and g.t_max == 3


def test_build_graph_anchors_at_min_raw():
    g = build_graph([("a", "b", 1_000_000), ("b", "a", 1_000_299),
                     ("a", "b", 1_000_300)])
    assert g.raw_anchor == 1_000_000
    assert g.t.tolist() == [0, 0, 1]


def test_build_graph_stable_tie_order():
    # same bin: ingestion order must be preserved
    g = build_graph([("a", "b", 100), ("c", "d", 50), ("e", "f", 120)])
    # all three in bin 0; order of appearance kept
    assert g.t.tolist() == [0, 0, 0]
    names = [(g.registry.name_of(int(s)), g.registry.name_of(int(d)))
             for s, d in zip(g.src, g.dst)]
    assert names == [("a", "b"), ("c", "d"), ("e", "f")]


def test_build_graph_custom_bin_width():
    g = build_graph([("a", "b", 0), ("a", "b", 3599), ("a", "b", 3600)],
                    bin_width_seconds=3600)
    assert g.t.tolist() == [0, 0, 1]


@pytest.mark.parametrize("records,fragment", [
    ([("a", "", 5)], "record 1"),
    ([("a", "b", 5), ("", "b", 5)], "record 2"),
    ([("a", "b", "soon")], "timestamp"),
    ([("a", "b", -3)], "negative"),
    ([("a",)], "record 1"),
])
def test_build_graph_rejects_bad_records(records, fragment):
    with pytest.raises(IngestError, match=fragment):
        build_graph(records)


def test_build_graph_rejects_bad_bin_width():
    with pytest.raises(ValueError):
        build_graph([("a", "b", 0)], bin_width_seconds=0)


def test_empty_graph_allowed():
    g = build_graph([])
    assert g.m == 0 and g.n == 0
    s = stats(g)
    assert s.n_edges == 0 and s.start_date is None


def test_arrays_are_immutable(tiny_graph):
    for arr in (tiny_graph.src, tiny_graph.dst, tiny_graph.t, tiny_graph.raw):
        with pytest.raises(ValueError):
            arr[0] = 99


def test_registry_roundtrip():
    reg = NodeRegistry()
    assert reg.intern("x") == 0
    assert reg.intern("y") == 1
    assert reg.intern("x") == 0
    assert reg.id_of("y") == 1
    assert reg.name_of(0) == "x"
    assert "y" in reg and "z" not in reg
    assert reg.get("z") is None
    assert len(reg) == 2
    with pytest.raises(KeyError):
        reg.id_of("z")


@given(record_lists())
@settings(max_examples=60, deadline=None)
def test_build_graph_is_sorted_and_lossless(records):
    g = build_graph(records)
    assert g.m == len(records)
    t = g.t
    assert bool(np.all(t[1:] >= t[:-1]))
    # multiset of (src name, dst name, raw) survives exactly
    got = sorted((g.registry.name_of(int(s)), g.registry.name_of(int(d)), int(r))
                 for s, d, r in zip(g.src, g.dst, g.raw))
    assert got == sorted((a, b, int(r)) for a, b, r in records)
    # bins recompute from raw
    assert np.array_equal(g.t, (g.raw - g.raw.min()) // g.bin_width_seconds)


# -- stats ---------------------------------------------------------------------


def test_stats_frozen_values(tiny_graph):
    s = stats(tiny_graph)
    assert s.n_nodes == 3 and s.n_edges == 6
    # pairs: (a,b)x2, (b,c), (c,c), (b,a), (a,c) -> 5 unique of 6
    assert s.unique_directed_pairs == 5
    assert s.distinct_nonloop_pairs == 4
    assert s.loop_count == 1
    assert s.unique_pair_fraction == pytest.approx(5 / 6)
    assert s.loop_fraction == pytest.approx(1 / 6)
    assert s.start_date == "1970-01-01" and s.end_date == "1970-01-01"


def test_stats_dates_are_utc():
    g = build_graph([("a", "b", 1609459199), ("a", "b", 1609459200)])
    s = stats(g)
    assert s.start_date == "2020-12-31"
    assert s.end_date == "2021-01-01"


# -- subgraph -------------------------------------------------------------------


def test_subgraph_reinterns_and_reanchors(tiny_graph):
    # keep edges at bins 3..5: (c,c), (b,a), (a,c)
    sub, new_of_old = subgraph(tiny_graph, np.array([3, 4, 5]))
    assert sub.m == 3
    assert sub.raw_anchor == 3 * 300
    assert sub.t.tolist() == [0, 1, 2]
    # first appearance order: c (src of (c,c)), then b, then a
    assert sub.registry.names() == ["c", "b", "a"]
    # mapping: old a=0 -> 2, b=1 -> 1, c=2 -> 0
    assert new_of_old.tolist() == [2, 1, 0]


def test_subgraph_marks_absent_nodes(tiny_graph):
    sub, new_of_old = subgraph(tiny_graph, np.array([0]))  # just (a,b)
    assert sub.n == 2
    assert new_of_old.tolist() == [0, 1, -1]


# -- batches --------------------------------------------------------------------


def test_batches_slice_contiguously(tiny_graph):
    bs = batches(tiny_graph, 4)
    assert [len(b) for b in bs] == [4, 2]
    assert [b.index for b in bs] == [0, 1]
    assert bs[0].start == 0 and bs[1].start == 4
    assert bs[1].t_min == 4 and bs[1].t_max == 5
    assert bs[0].timestamps.tolist() == [0, 1, 2, 3]


def test_batches_reject_bad_k(tiny_graph):
    with pytest.raises(ValueError):
        batches(tiny_graph, 0)


# -- history index (checked against plain-scan oracles) --------------------------


@given(graphs())
@settings(max_examples=60, deadline=None)
def test_history_index_matches_oracles(g):
    idx = g.history
    times = pair_times_map(g)
    triples = triple_set(g)
    firsts = first_seen_map(g)
    loops = loop_first_map(g)
    t_probe = list(range(-1, int(g.t_max) + 3))

    for (u, v), ts in times.items():
        assert idx.pair_times(u, v).tolist() == ts
        assert idx.has_pair(u, v)
    assert not idx.has_pair(g.n - 1, g.n - 1) or (g.n - 1, g.n - 1) in times

    for u, v in list(times)[:10]:
        for t in t_probe:
            assert idx.pair_occurred(u, v, t) == ((u, v, t) in triples)
            assert idx.pair_occurred_before(u, v, t) == any(x < t for x in times[(u, v)])
            expect_last = max((x for x in times[(u, v)] if x <= t), default=None)
            assert idx.last_occurrence_at_or_before(u, v, t) == expect_last

    # vectorized membership agrees with the scalar scan on a grid
    us, vs, tq = [], [], []
    for (u, v) in times:
        for t in t_probe:
            us.append(u); vs.append(v); tq.append(t)
    got = idx.occurred_many(np.array(us), np.array(vs), np.array(tq))
    want = np.array([(u, v, t) in triples for u, v, t in zip(us, vs, tq)])
    assert np.array_equal(got, want)
    # the trusted fast variant must agree wherever its input contract holds
    in_range = [i for i, t in enumerate(tq) if 0 <= t < idx._span]
    if in_range:
        fast = idx.occurred_fast(
            np.array([us[i] for i in in_range], dtype=np.int64),
            np.array([vs[i] for i in in_range], dtype=np.int64),
            np.array([tq[i] for i in in_range], dtype=np.int64))
        assert np.array_equal(fast, want[in_range])

    # per-row window slices agree with slicing the oracle's time lists
    pairs = list(times)
    w_us = np.array([p[0] for p in pairs], dtype=np.int64)
    w_vs = np.array([p[1] for p in pairs], dtype=np.int64)
    w_lo = np.array([tp % 4 for tp in range(len(pairs))], dtype=np.int64)
    w_hi = w_lo + np.array([tp % 7 for tp in range(len(pairs))], dtype=np.int64)
    slices = idx.window_slices(w_us, w_vs, w_lo, w_hi)
    for i, (u, v) in enumerate(pairs):
        expect = [x for x in times[(u, v)] if w_lo[i] <= x <= w_hi[i]]
        assert slices[i].tolist() == expect

    # prior distinct pairs strictly before t
    for t in t_probe:
        want_pairs = {p for p, f in firsts.items() if f < t}
        assert idx.prior_pair_count(t) == len(want_pairs)
        got_pairs = {idx.prior_pair(r) for r in range(len(want_pairs))}
        assert got_pairs == want_pairs

    # loopless pool strictly before t
    for t in t_probe:
        want_nodes = {u for u in range(g.n)
                      if u not in loops or loops[u] >= t}
        assert idx.loopless_count(t) == len(want_nodes)
        assert set(idx.loopless_nodes(t).tolist()) == want_nodes
        if want_nodes:
            picks = idx.pick_loopless(derive_rng(1, t + 1), t, 64)
            assert set(picks.tolist()) <= want_nodes


def test_history_index_prior_counts_vectorized(tiny_graph):
    idx = tiny_graph.history
    ts = np.array([0, 1, 2, 3, 4, 5, 6])
    got = idx.prior_pair_counts(ts)
    want = np.array([idx.prior_pair_count(int(t)) for t in ts])
    assert np.array_equal(got, want)


def test_history_index_huge_ids_fall_back():
    # (pair, bin) products beyond the fast-path guard still answer correctly
    n = 2**20
    src = np.array([5, n - 2], dtype=np.int64)
    dst = np.array([7, n - 3], dtype=np.int64)
    t = np.array([0, 2**31], dtype=np.int64)
    idx = HistoryIndex(src, dst, t, n)
    assert idx._combo is None  # encoding declined, scalar path in use
    assert idx.pair_occurred(5, 7, 0)
    assert not idx.pair_occurred(5, 7, 1)
    assert idx.pair_occurred(n - 2, n - 3, 2**31)
    got = idx.occurred_many(src, dst, np.array([0, 2**31]))
    assert got.tolist() == [True, True]
    assert not idx.occurred_many(src, dst, np.array([1, 1])).any()
