#!/usr/bin/env python3
"""Run the full monthly pipeline and print a strategy comparison table.

Executes every requested negative-sampling strategy over all monthly
(train, evaluate) window pairs of a dataset, scoring with one of the
built-in heuristics, then prints the per-split Overall AUC of each
strategy and the average-rank summary. All artifacts (split files,
sample files, per-strategy reports, summary.json) land in ``--out-dir``
exactly as ``dins run`` would write them.

Built-in heuristics do not train on the sampled negatives, so with
``--scorer`` the strategy columns coincide (evaluation negatives are
shared); they separate once externally trained per-strategy scores are
supplied through a run config with ``scores_dir`` set.

Example
-------
    python scripts/make_synthetic.py months --out data/demo.csv
    python scripts/run_baselines.py data/demo.csv --out-dir runs/demo \
        --strategies dins,random,historical --scorer memory
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from dins import PipelineConfig, run_experiment
from dins.scorers import SCORER_KINDS


def print_table(summary: dict, strategies: tuple[str, ...]) -> None:
    label_w = max([len("split")] + [len(o["label"]) for o in summary["splits"]])
    header = f"{'split':<{label_w}}" + "".join(f"  {s:>12}" for s in strategies)
    print(header)
    print("-" * len(header))
    for o in summary["splits"]:
        cells = []
        for s in strategies:
            rep = o.get("reports", {}).get(s)
            if rep is None:
                cells.append(f"  {'—':>12}")
            else:
                cells.append(f"  {rep['categories']['overall']['auc']:>12.4f}")
        print(f"{o['label']:<{label_w}}" + "".join(cells))
    ranks = summary["rank_summary"]
    print("-" * len(header))
    cells = []
    for s in strategies:
        r = ranks["ranks"][s]
        cells.append(f"  {'—':>12}" if r is None else f"  {r:>12.2f}")
    print(f"{'avg rank':<{label_w}}" + "".join(cells)
          + f"   (over {ranks['n_splits']} splits)")


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("dataset", help="edge CSV/TSV or .npz cache")
    ap.add_argument("--out-dir", required=True, metavar="DIR")
    ap.add_argument("--strategies", default="dins,random,historical",
                    help="comma-separated strategy names")
    ap.add_argument("--scorer", choices=SCORER_KINDS, default="memory")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--q", type=int, default=5)
    ap.add_argument("--batch-size", type=int, default=1000)
    ap.add_argument("--val-fraction", type=float, default=0.5)
    ap.add_argument("--windows", default="monthly")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)

    strategies = tuple(s.strip() for s in args.strategies.split(",") if s.strip())
    config = PipelineConfig(dataset=args.dataset, strategies=strategies,
                            scorer=args.scorer, seed=args.seed, q=args.q,
                            batch_size=args.batch_size,
                            val_fraction=args.val_fraction,
                            windows=args.windows)
    t0 = time.perf_counter()
    summary = run_experiment(config, args.out_dir, jobs=args.jobs)
    elapsed = time.perf_counter() - t0

    n_ok = sum(o["status"] == "ok" for o in summary["splits"])
    print(f"\n{n_ok}/{len(summary['splits'])} splits ok "
          f"in {elapsed:.1f}s — results in {args.out_dir}\n")
    print_table(summary, strategies)
    return 0 if n_ok == len(summary["splits"]) else 1


if __name__ == "__main__":
    raise SystemExit(main())
