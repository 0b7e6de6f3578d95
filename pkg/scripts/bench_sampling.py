#!/usr/bin/env python3
"""Benchmark negative-sampling throughput on a large random graph.

Builds a uniform random graph directly from arrays (no parsing), warms
the pair/time index the way the pipeline does, then times each strategy
over a fixed number of batches and reports per-batch latency and
samples per second.

Example
-------
    python scripts/bench_sampling.py --nodes 50000 --edges 1000000 \
        --k 1000 --q 5 --batches 50
"""

from __future__ import annotations

import argparse
import itertools
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from dins import SamplerConfig, sample_batches
from dins.sampling import STRATEGIES
from dins.synthetic import random_graph


def bench_one(graph, strategy: str, config: SamplerConfig,
              n_batches: int) -> tuple[int, int, float]:
    stream = itertools.islice(sample_batches(graph, strategy, config),
                              n_batches)
    n_sets = n_samples = 0
    t0 = time.perf_counter()
    for ss in stream:
        n_sets += 1
        n_samples += len(ss.samples)
    return n_sets, n_samples, time.perf_counter() - t0


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=50_000)
    ap.add_argument("--edges", type=int, default=1_000_000)
    ap.add_argument("--span-bins", type=int, default=288)
    ap.add_argument("--k", type=int, default=1000, help="batch size")
    ap.add_argument("--q", type=int, default=5)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--batches", type=int, default=50,
                    help="batches to time per strategy")
    ap.add_argument("--strategies", default=",".join(sorted(STRATEGIES)),
                    help="comma-separated strategy names")
    args = ap.parse_args(argv)

    print(f"building graph: {args.nodes} nodes, {args.edges} edges ...")
    t0 = time.perf_counter()
    g = random_graph(args.nodes, args.edges, seed=args.seed,
                     t_span_bins=args.span_bins)
    build_s = time.perf_counter() - t0
    t0 = time.perf_counter()
    g.history                                   # index built once, as in the pipeline
    index_s = time.perf_counter() - t0
    print(f"graph {build_s:.2f}s, index {index_s:.2f}s\n")

    config = SamplerConfig(k=args.k, q=args.q, seed=args.seed)
    names = [s.strip() for s in args.strategies.split(",") if s.strip()]
    width = max(len(n) for n in names)
    print(f"{'strategy':<{width}}  {'batches':>7}  {'samples':>9}  "
          f"{'total s':>8}  {'ms/batch':>9}  {'samples/s':>10}")
    for name in names:
        n_sets, n_samples, secs = bench_one(g, name, config, args.batches)
        per_batch = 1000 * secs / max(n_sets, 1)
        rate = n_samples / secs if secs > 0 else float("inf")
        print(f"{name:<{width}}  {n_sets:>7}  {n_samples:>9}  "
              f"{secs:>8.3f}  {per_batch:>9.2f}  {rate:>10.0f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
