"""File formats and the command-line surface, exercised in-process."""

from __future__ import annotations

import csv
import io
import json
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

import numpy as np
import pytest

from dins import SamplerConfig, build_graph, sample_batches
from dins.cli import main
from dins.runner import average_ranks
from dins.sample_io import (IngestError, atomic_open, load_graph,
                            read_edge_csv, read_samples_jsonl,
                            read_scores_jsonl, sample_key, save_graph,
                            write_samples_jsonl, write_scores_jsonl)
from dins.synthetic import multi_month_records


def run_cli(*argv: str):
    """Invoke the CLI in-process; returns (exit_code, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


def cli_json(*argv: str) -> dict:
    code, out, err = run_cli(*argv)
    assert code == 0, err
    return json.loads(out)


@pytest.fixture
def months_csv(tmp_path):
    """Two calendar months of synthetic traffic as an edge CSV."""
    records = multi_month_records(10, 150, 2, seed=1)
    path = tmp_path / "months.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["src", "dst", "timestamp"])
        w.writerows(records)
    return path


# -- interchange formats ------------------------------------------------------------


def test_sample_key_is_frozen():
    assert sample_key(1, 2, 3, "temporal") == "35fe651d2ff7a924"
    assert sample_key(0, 0, 0, "observed") == "46c9725a06e009bc"


def test_samples_jsonl_roundtrip(tmp_path):
    g = build_graph([("a", "b", 0), ("b", "c", 300), ("c", "a", 600)])
    sets = list(sample_batches(g, "dins", SamplerConfig(k=2, q=2, t_f=4, seed=3),
                               include_positives=True))
    path = tmp_path / "s.jsonl"
    meta = write_samples_jsonl(path, sets, with_keys=True)
    recs = read_samples_jsonl(path)
    assert len(recs) == meta["n_samples"] == sum(len(ss.samples) for ss in sets)
    assert meta["n_batches"] == len(sets)
    for rec in recs:
        assert rec["label"] in ("pos", "neg")
        assert rec["key"] == sample_key(rec["src"], rec["dst"], rec["t"],
                                        rec["category"])


def test_samples_jsonl_reader_reports_line_numbers(tmp_path):
    path = tmp_path / "bad.jsonl"
    good = json.dumps({"src": 0, "dst": 1, "t": 2, "label": "negative",
                       "category": "temporal", "batch": 0})
    path.write_text(good + "\n{not json\n")
    with pytest.raises(IngestError, match="line 2"):
        read_samples_jsonl(path)
    path.write_text(good + "\n" + json.dumps({"src": 0, "dst": 1}) + "\n")
    with pytest.raises(IngestError, match="line 2.*missing"):
        read_samples_jsonl(path)


def test_scores_jsonl_roundtrip_and_errors(tmp_path):
    path = tmp_path / "scores.jsonl"
    scores = {"aa": 0.25, "bb": 1.0, "cc": 0.0}
    write_scores_jsonl(path, scores)
    assert read_scores_jsonl(path) == scores
    path.write_text('{"key": "aa", "score": 0.5}\n{"key": "bb"}\n')
    with pytest.raises(IngestError, match="line 2"):
        read_scores_jsonl(path)


def test_graph_npz_roundtrip(tmp_path):
    g = build_graph([("a", "b", 17), ("b", "b", 451), ("c", "a", 1000)],
                    bin_width_seconds=60)
    path = tmp_path / "g.npz"
    save_graph(path, g)
    h = load_graph(path)
    assert h.n == g.n and h.m == g.m
    assert h.bin_width_seconds == 60 and h.raw_anchor == g.raw_anchor
    np.testing.assert_array_equal(h.src, g.src)
    np.testing.assert_array_equal(h.dst, g.dst)
    np.testing.assert_array_equal(h.t, g.t)
    np.testing.assert_array_equal(h.raw, g.raw)
    assert h.registry.names() == g.registry.names()


def test_edge_csv_error_cites_line_number(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("src,dst,timestamp\nalice,bob,notatime\n")
    with pytest.raises(IngestError, match="line 2"):
        read_edge_csv(path)


def test_atomic_write_leaves_nothing_behind(tmp_path):
    target = tmp_path / "out" / "file.json"
    with pytest.raises(RuntimeError):
        with atomic_open(target) as fh:
            fh.write("partial")
            raise RuntimeError("boom")
    assert not target.exists()
    assert list(target.parent.iterdir()) == []  # no stray temp files


# -- subcommands ---------------------------------------------------------------------


def test_ingest_then_stats_match_csv(months_csv, tmp_path, monkeypatch):
    npz = tmp_path / "months.npz"
    info = cli_json("ingest", str(months_csv), "--out", str(npz))
    assert Path(info["path"]).exists() and info["n_edges"] == 300
    from_csv = cli_json("stats", str(months_csv))
    from_npz = cli_json("stats", str(npz))
    assert from_csv == from_npz
    assert from_csv["n_edges"] == 300
    assert from_csv["start_date"].startswith("2021-01")
    # default output lands in the configured cache directory
    monkeypatch.setenv("DINS_CACHE_DIR", str(tmp_path / "cache"))
    info = cli_json("ingest", str(months_csv))
    assert Path(info["path"]).parent == tmp_path / "cache"
    again = cli_json("ingest", str(months_csv))   # idempotent re-ingest
    assert again == info


def test_split_writes_directories(months_csv, tmp_path):
    out_dir = tmp_path / "splits"
    info = cli_json("split", str(months_csv), "--out-dir", str(out_dir))
    assert len(info["splits"]) == 1
    entry = info["splits"][0]
    assert entry["label"] == "2021-01"
    d = Path(entry["dir"])
    assert {p.name for p in d.iterdir()} == {"train.csv", "val.csv",
                                             "test.csv", "split_meta.json"}
    assert entry["train"] == 150
    assert entry["validation"] + entry["test"] + entry["dropped"] == 150


def test_sample_writes_sidecars_and_is_deterministic(months_csv, tmp_path):
    out = tmp_path / "neg.jsonl"
    info = cli_json("sample", str(months_csv), "--strategy", "dins",
                    "--q", "3", "--batch-size", "64", "--seed", "9",
                    "--negatives-only", "--with-keys", "--out", str(out))
    assert info["n_samples"] > 0
    recs = read_samples_jsonl(out)
    # --negatives-only drops the observed echo; extra positives produced by
    # the combined procedure (future recurrences) are part of its output
    assert not any(r["category"] == "observed" for r in recs)
    for r in recs:
        if r["label"] == "pos":
            assert r["category"] == "positive_enhancement"
    nodes = json.loads((tmp_path / "neg.nodes.json").read_text())
    meta = json.loads((tmp_path / "neg.meta.json").read_text())
    assert isinstance(nodes, list) and len(nodes) == 10  # position = node id
    assert meta["strategy"] == "dins" and meta["config"]["seed"] == 9
    out2 = tmp_path / "neg2.jsonl"
    cli_json("sample", str(months_csv), "--strategy", "dins",
             "--q", "3", "--batch-size", "64", "--seed", "9",
             "--negatives-only", "--with-keys", "--out", str(out2))
    assert out.read_bytes() == out2.read_bytes()


def test_score_requires_train_for_history_scorers(months_csv, tmp_path):
    samples = tmp_path / "s.jsonl"
    cli_json("sample", str(months_csv), "--strategy", "random",
             "--batch-size", "64", "--out", str(samples))
    code, _, err = run_cli("score", "--scorer", "memory",
                           "--samples", str(samples),
                           "--out", str(tmp_path / "x.jsonl"))
    assert code == 1
    assert "--train" in json.loads(err)["message"]
    info = cli_json("score", "--scorer", "memory", "--samples", str(samples),
                    "--train", str(months_csv),
                    "--out", str(tmp_path / "scores.jsonl"))
    scores = read_scores_jsonl(tmp_path / "scores.jsonl")
    assert len(scores) == info["n_scores"] > 0
    assert set(scores.values()) <= {0.0, 1.0}


def test_evaluate_split_dir(months_csv, tmp_path):
    out_dir = tmp_path / "splits"
    cli_json("split", str(months_csv), "--out-dir", str(out_dir))
    report_path = tmp_path / "report.json"
    export = tmp_path / "eval_samples.jsonl"
    payload = cli_json("evaluate", "--split-dir", str(out_dir / "2021-01"),
                       "--scorer", "recency", "--export", str(export),
                       "--out", str(report_path))
    cats = payload["categories"]
    assert set(cats) == {"random_sender", "random_receiver", "loop",
                         "h6", "h12", "h24", "overall"}
    for res in cats.values():
        assert 0.0 <= res["auc"] <= 1.0
    assert payload["metadata"]["split"] == "2021-01"
    assert json.loads(report_path.read_text()) == payload
    exported = [json.loads(line) for line in export.read_text().splitlines()]
    assert {r["category"] for r in exported} >= {"observed", "random_sender"}
    assert all("key" in r for r in exported)


def test_run_and_report(months_csv, tmp_path):
    run_dir = tmp_path / "run"
    info = cli_json("run", str(months_csv), "--out-dir", str(run_dir),
                    "--strategies", "dins,random", "--batch-size", "64",
                    "--scorer", "memory")
    assert info["statuses"] == {"2021-01": "ok"}
    assert info["rank_summary"]["n_splits"] == 1
    summary = json.loads((run_dir / "summary.json").read_text())
    assert summary["n_windows"] == 2
    split_dir = run_dir / "splits" / "2021-01"
    for name in ("report_dins.json", "report_random.json",
                 "samples_dins.jsonl", "samples_random.jsonl",
                 "eval_samples.jsonl", "split_meta.json"):
        assert (split_dir / name).exists(), name

    code, out, _ = run_cli("report", "--run-dir", str(run_dir), "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["split", "strategy", "category", "auc",
                       "n_pos", "n_neg", "shortfall"]
    assert len(rows) == 1 + 2 * 7           # strategies x categories
    code, out, _ = run_cli("report", "--run-dir", str(run_dir),
                           "--format", "plotdata")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["month", "category", "strategy", "auc"]
    assert len(rows) == 1 + 2 * 7


def test_run_config_file_equivalence(months_csv, tmp_path):
    cfg = {"dataset": str(months_csv), "batch_size": 64, "scorer": "memory",
           "strategies": ["dins"]}
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    a = cli_json("run", str(months_csv), "--out-dir", str(tmp_path / "a"),
                 "--batch-size", "64", "--scorer", "memory")
    b = cli_json("run", "--config", str(cfg_path),
                 "--out-dir", str(tmp_path / "b"))
    assert a["statuses"] == b["statuses"]
    ra = json.loads((tmp_path / "a/splits/2021-01/report_dins.json").read_text())
    rb = json.loads((tmp_path / "b/splits/2021-01/report_dins.json").read_text())
    assert ra == rb
    code, _, err = run_cli("run", str(months_csv), "--config", str(cfg_path),
                           "--out-dir", str(tmp_path / "c"))
    assert code == 1 and "not both" in json.loads(err)["message"]


def test_errors_are_json_on_stderr(tmp_path):
    code, out, err = run_cli("stats", str(tmp_path / "missing.csv"))
    assert code == 1 and out == ""
    payload = json.loads(err)
    assert set(payload) == {"error", "message"}
    assert "missing.csv" in payload["message"]


def test_version_flag():
    with pytest.raises(SystemExit) as exc:
        run_cli("--version")
    assert exc.value.code == 0


# -- rank aggregation -----------------------------------------------------------------


def outcome(label, **aucs):
    return {"label": label, "status": "ok",
            "reports": {s: {"categories": {"overall": {"auc": a}}}
                        for s, a in aucs.items()}}


def test_average_ranks_oracle():
    outcomes = [
        outcome("m1", a=0.9, b=0.8, c=0.9),    # a,c tie for 1st -> 1.5; b -> 3
        outcome("m2", a=0.5, b=0.5, c=0.5),    # three-way tie -> 2 each
        outcome("m3", a=0.9),                  # b, c missing -> split excluded
    ]
    got = average_ranks(outcomes, ("a", "b", "c"))
    assert got["n_splits"] == 2
    assert got["ranks"] == {"a": 1.75, "b": 2.5, "c": 1.75}


def test_average_ranks_empty():
    got = average_ranks([], ("a", "b"))
    assert got == {"ranks": {"a": None, "b": None}, "n_splits": 0}
