"""File interchange: edge CSVs, graph caches, JSON-lines samples/scores.

Formats are deliberately small and stable:

* edge CSV/TSV with a header naming source, destination and raw epoch
  seconds (column names remappable);
* graph cache as a compressed ``.npz`` holding the sorted arrays plus
  the name table;
* samples as JSON-lines ``{"src", "dst", "t", "label", "category",
  "batch"}`` with an optional ``"key"`` for matching externally
  computed scores;
* scores as JSON-lines ``{"key", "score"}``.

Every writer goes through a temp-file-then-rename so a crashed run
never leaves a truncated artifact behind, and every format round-trips
through its reader in this module.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Union

import numpy as np

from .graph import (DynamicGraph, EdgeBlock, IngestError, NodeRegistry,
                    build_graph)
from .sampling import Sample, SampleSet
from .split import MonthlySplit, WindowSpec

PathLike = Union[str, Path]

CACHE_DIR_ENV = "DINS_CACHE_DIR"
DEFAULT_CACHE_DIR = ".dins_cache"
_CACHE_FORMAT = 1


def cache_dir() -> Path:
    return Path(os.environ.get(CACHE_DIR_ENV, DEFAULT_CACHE_DIR))


@contextmanager
def atomic_open(path: PathLike, mode: str = "w") -> Iterator:
    """Open a temp file next to ``path`` and rename it over on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, encoding=None if "b" in mode else "utf-8") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_json(path: PathLike, obj) -> None:
    with atomic_open(path) as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path: PathLike):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def read_name_list(path: PathLike) -> list[str]:
    """One node name per line; blank lines and ``#`` comments are skipped."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            name = line.strip()
            if name and not name.startswith("#"):
                out.append(name)
    return out


# -- sample / score JSON-lines ---------------------------------------------


def sample_key(src: int, dst: int, t: int, category: str) -> str:
    """Stable 16-hex-char identity of a sample, equal across runs and hosts."""
    h = hashlib.blake2b(f"{src}|{dst}|{t}|{category}".encode(), digest_size=8)
    return h.hexdigest()


def sample_record(sample: Sample, batch: int, with_key: bool = False) -> dict:
    rec = {"src": sample.src, "dst": sample.dst, "t": sample.t,
           "label": sample.label, "category": sample.category, "batch": batch}
    if with_key:
        rec["key"] = sample_key(sample.src, sample.dst, sample.t, sample.category)
    return rec


def write_samples_jsonl(path: PathLike, sets: Iterable[SampleSet],
                        *, with_keys: bool = False) -> dict:
    """Stream sample sets to JSON-lines; returns aggregate counters."""
    n = 0
    n_batches = 0
    tallies: dict[str, int] = {}
    with atomic_open(path) as fh:
        for ss in sets:
            n_batches += 1
            for s in ss.samples:
                fh.write(json.dumps(sample_record(s, ss.origin_batch, with_keys)))
                fh.write("\n")
                n += 1
            for k, v in ss.tallies.items():
                tallies[k] = tallies.get(k, 0) + int(v)
    return {"n_samples": n, "n_batches": n_batches, "tallies": tallies}


_SAMPLE_FIELDS = ("src", "dst", "t", "label", "category", "batch")


def read_samples_jsonl(path: PathLike) -> list[dict]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"{path}: line {i}: bad JSON ({exc.msg})") from None
            missing = [f for f in _SAMPLE_FIELDS if f not in rec]
            if missing:
                raise IngestError(f"{path}: line {i}: missing fields {missing}")
            out.append(rec)
    return out


def write_scores_jsonl(path: PathLike, scores: Mapping[str, float]) -> None:
    with atomic_open(path) as fh:
        for key, score in scores.items():
            fh.write(json.dumps({"key": key, "score": float(score)}))
            fh.write("\n")


def read_scores_jsonl(path: PathLike) -> dict[str, float]:
    out: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                out[str(rec["key"])] = float(rec["score"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                raise IngestError(f"{path}: line {i}: expected "
                                  '{"key": ..., "score": ...}') from None
    return out


# -- edge CSV ---------------------------------------------------------------


def _delimiter_for(path: Path) -> str:
    return "\t" if path.suffix.lower() in (".tsv", ".tab") else ","


def read_edge_csv(path: PathLike,
                  columns: tuple[str, str, str] = ("src", "dst", "timestamp")
                  ) -> list[tuple[str, str, int]]:
    """Read ``(src, dst, raw_epoch_seconds)`` records from a headered file.

    ``columns`` maps which header names hold source, destination and
    timestamp. Malformed rows raise :class:`IngestError` naming the
    guilty line (the header is line 1).
    """
    path = Path(path)
    delim = _delimiter_for(path)
    records: list[tuple[str, str, int]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=delim)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        try:
            cols = tuple(header.index(c) for c in columns)
        except ValueError:
            raise IngestError(f"{path}: header {header} does not contain "
                              f"columns {list(columns)}") from None
        for i, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) <= max(cols):
                raise IngestError(f"{path}: line {i}: expected at least "
                                  f"{max(cols) + 1} fields, got {len(row)}")
            s = row[cols[0]].strip()
            d = row[cols[1]].strip()
            ts = row[cols[2]].strip()
            if not s or not d:
                raise IngestError(f"{path}: line {i}: missing node name")
            try:
                raw = int(ts)
            except ValueError:
                raise IngestError(f"{path}: line {i}: timestamp {ts!r} "
                                  "is not an integer") from None
            if raw < 0:
                raise IngestError(f"{path}: line {i}: negative timestamp {raw}")
            records.append((s, d, raw))
    return records


def write_edge_csv(path: PathLike, registry: NodeRegistry, src: np.ndarray,
                   dst: np.ndarray, raw: np.ndarray) -> None:
    path = Path(path)
    delim = _delimiter_for(path)
    with atomic_open(path, "w") as fh:
        writer = csv.writer(fh, delimiter=delim, lineterminator="\n")
        writer.writerow(["src", "dst", "timestamp"])
        for i in range(len(src)):
            writer.writerow([registry.name_of(int(src[i])),
                             registry.name_of(int(dst[i])), int(raw[i])])


# -- graph cache --------------------------------------------------------------


def save_graph(path: PathLike, graph: DynamicGraph) -> None:
    """Write a graph to a compressed ``.npz`` cache."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        with open(tmp, "wb") as fh:
            np.savez_compressed(
                fh,
                format=np.int64(_CACHE_FORMAT),
                src=graph.src, dst=graph.dst, t=graph.t, raw=graph.raw,
                names=np.asarray(graph.registry.names(), dtype=str),
                bin_width_seconds=np.int64(graph.bin_width_seconds),
                raw_anchor=np.int64(graph.raw_anchor),
            )
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def load_graph(path: PathLike) -> DynamicGraph:
    with np.load(path, allow_pickle=False) as z:
        if int(z["format"]) != _CACHE_FORMAT:
            raise IngestError(f"{path}: unsupported cache format {int(z['format'])}")
        registry = NodeRegistry(str(name) for name in z["names"])
        return DynamicGraph(registry, z["src"], z["dst"], z["t"], z["raw"],
                            int(z["bin_width_seconds"]), int(z["raw_anchor"]))


def load_dataset(path: PathLike, bin_width_seconds: int = 300,
                 columns: tuple[str, str, str] = ("src", "dst", "timestamp"),
                 drop_names: Iterable[str] = (),
                 min_month_edges: int = 0) -> DynamicGraph:
    """Load a graph from a CSV/TSV dataset or an ``.npz`` cache.

    Caches are returned as stored (their build already applied any
    filtering); CSV input is filtered by the drop list and the sparse
    month threshold before binning, so the bin anchor reflects the kept
    records only.
    """
    path = Path(path)
    if path.suffix.lower() == ".npz":
        return load_graph(path)
    records = read_edge_csv(path, columns=columns)
    drop = frozenset(drop_names)
    if drop:
        records = [r for r in records if r[0] not in drop and r[1] not in drop]
    if min_month_edges > 1 and records:
        from .split import sparse_month_mask
        raws = np.array([r[2] for r in records], dtype=np.int64)
        keep = sparse_month_mask(raws, min_month_edges)
        records = [r for r, k in zip(records, keep.tolist()) if k]
    return build_graph(records, bin_width_seconds)


# -- split directories --------------------------------------------------------


def write_split_dir(dirpath: PathLike, split: MonthlySplit) -> None:
    """Write train/val/test CSVs plus metadata for one split."""
    d = Path(dirpath)
    d.mkdir(parents=True, exist_ok=True)
    reg = split.train.registry
    write_edge_csv(d / "train.csv", reg, split.train.src, split.train.dst,
                   split.train.raw)
    write_edge_csv(d / "val.csv", reg, split.val.src, split.val.dst, split.val.raw)
    write_edge_csv(d / "test.csv", reg, split.test.src, split.test.dst,
                   split.test.raw)
    meta = {
        "train_window": split.train_window.to_dict(),
        "eval_window": split.eval_window.to_dict(),
        "counts": {
            "train": split.train.m,
            "validation": len(split.val),
            "test": len(split.test),
            "dropped": split.dropped_count,
            "eval_total": len(split.val) + len(split.test) + split.dropped_count,
        },
        "train_nodes": split.train.n,
        "bin_width_seconds": split.train.bin_width_seconds,
        "raw_anchor": split.train.raw_anchor,
        "val_fraction": split.val_fraction,
    }
    write_json(d / "split_meta.json", meta)


def _block_from_records(records: list[tuple[str, str, int]],
                        registry: NodeRegistry, anchor: int,
                        bin_width: int, what: str) -> EdgeBlock:
    if not records:
        return EdgeBlock.empty()
    try:
        src = np.array([registry.id_of(r[0]) for r in records], dtype=np.int64)
        dst = np.array([registry.id_of(r[1]) for r in records], dtype=np.int64)
    except KeyError as exc:
        raise IngestError(f"{what}: node {exc.args[0]!r} does not appear "
                          "in the training edges") from None
    raw = np.array([r[2] for r in records], dtype=np.int64)
    bins = (raw - anchor) // bin_width
    order = np.argsort(bins, kind="stable")
    return EdgeBlock(src[order], dst[order], bins[order], raw[order])


def read_split_dir(dirpath: PathLike) -> MonthlySplit:
    """Reload a split directory written by :func:`write_split_dir`."""
    d = Path(dirpath)
    meta = read_json(d / "split_meta.json")
    bin_width = int(meta["bin_width_seconds"])
    train = build_graph(read_edge_csv(d / "train.csv"), bin_width)
    val = _block_from_records(read_edge_csv(d / "val.csv"), train.registry,
                              train.raw_anchor, bin_width, str(d / "val.csv"))
    test = _block_from_records(read_edge_csv(d / "test.csv"), train.registry,
                               train.raw_anchor, bin_width, str(d / "test.csv"))
    tw = meta["train_window"]
    ew = meta["eval_window"]
    return MonthlySplit(
        train_window=WindowSpec(tw["label"], int(tw["start"]), int(tw["end"])),
        eval_window=WindowSpec(ew["label"], int(ew["start"]), int(ew["end"])),
        train=train, val=val, test=test,
        dropped_count=int(meta["counts"]["dropped"]),
        val_fraction=float(meta["val_fraction"]),
    )


def write_registry_json(path: PathLike, registry: NodeRegistry) -> None:
    """Dump the id -> name table (list position is the id)."""
    write_json(path, registry.names())
