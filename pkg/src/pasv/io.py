"""Readers and writers for the on-disk formats.

DAG file
    ``{"players": ["a", "b", ...], "edges": [["a", "b"], ...]}`` with string
    labels, or compact ``{"n": 4, "edges": [[0, 1], ...], "index_base": 0}``.
    An edge ``[a, b]`` means ``a`` precedes ``b``; duplicates are ignored.
Weights file
    ``{"lambda": {"label": value}}`` or ``{"base": b, "exponents": {"label": c}}``
    (``lambda = b ** c``). Unlisted players get weight 1.
Grouping file
    ``{"label": "group", ...}`` covering every player.
Utility table
    CSV with columns ``subset`` (canonical encoding) and ``value``.
Predictor
    ``{"classes": m, "weights": [[...], ...], "bias": [...]}``.
Dataset
    CSV with a header; the label column is chosen by name.
Lineage market
    ``{"sources": [...], "copies": {"copy": "source"}, "gains": {...},
    "noise_penalty": {...}}`` keyed by player labels.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._validation import decode_subset
from .poset import Poset, build_poset
from .utility import LineageUtility, LogisticPredictor, TableUtility, TabularDataset
from .valuation import PositionCurve, ValueReport


class FormatError(ValueError):
    """A file exists but does not follow its format."""


@dataclass
class Dag:
    poset: Poset
    labels: list[str]

    @property
    def index(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    def resolve(self, label) -> int:
        try:
            return self.index[str(label)]
        except KeyError:
            raise FormatError(f"unknown player label {label!r}") from None


def _read_json(path) -> object:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc


def parse_dag(obj: Mapping) -> Dag:
    if not isinstance(obj, Mapping) or "edges" not in obj:
        raise FormatError("DAG object needs an 'edges' list")
    if "players" in obj:
        labels = [str(x) for x in obj["players"]]
        if len(set(labels)) != len(labels):
            raise FormatError("duplicate player labels")
        index = {lab: i for i, lab in enumerate(labels)}
        try:
            edges = {(index[str(a)], index[str(b)]) for a, b in obj["edges"]}
        except KeyError as exc:
            raise FormatError(f"edge endpoint {exc.args[0]!r} is not a listed player") from None
    elif "n" in obj:
        n = int(obj["n"])
        base = int(obj.get("index_base", 0))
        labels = [str(i + base) for i in range(n)]
        edges = {(int(a) - base, int(b) - base) for a, b in obj["edges"]}
    else:
        raise FormatError("DAG object needs 'players' or 'n'")
    return Dag(build_poset(len(labels), sorted(edges)), labels)


def load_dag(path) -> Dag:
    return parse_dag(_read_json(path))


def parse_weights(obj: Mapping, dag: Dag) -> np.ndarray:
    w = np.ones(len(dag.labels))
    if "lambda" in obj:
        for lab, v in obj["lambda"].items():
            w[dag.resolve(lab)] = float(v)
    elif "base" in obj:
        base = float(obj["base"])
        for lab, c in obj.get("exponents", {}).items():
            w[dag.resolve(lab)] = base ** float(c)
    else:
        raise FormatError("weights need 'lambda' or 'base'/'exponents'")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise FormatError("weights must be finite and positive")
    return w


def load_weights(path, dag: Dag) -> np.ndarray:
    return parse_weights(_read_json(path), dag)


def load_groups(path, dag: Dag) -> dict[int, str]:
    obj = _read_json(path)
    return {dag.resolve(lab): str(g) for lab, g in obj.items()}


def load_table_utility(path, n: int) -> TableUtility:
    entries = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"subset", "value"} <= set(reader.fieldnames):
            raise FormatError(f"{path}: needs columns 'subset' and 'value'")
        for row in reader:
            entries[decode_subset(row["subset"], n)] = float(row["value"])
    if not entries:
        raise FormatError(f"{path}: no rows")
    return TableUtility(entries, n_players=n)


def load_predictor(path) -> LogisticPredictor:
    obj = _read_json(path)
    try:
        return LogisticPredictor.from_dict(obj)
    except KeyError as exc:
        raise FormatError(f"{path}: missing key {exc}") from None


def load_dataset(path, label_column: str) -> TabularDataset:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if label_column not in header:
            raise FormatError(f"{path}: no label column {label_column!r}")
        li = header.index(label_column)
        rows, labels = [], []
        for rec in reader:
            if not rec:
                continue
            labels.append(int(float(rec[li])))
            rows.append([float(v) for j, v in enumerate(rec) if j != li])
    return TabularDataset(np.array(rows), np.array(labels))


def load_lineage(path, dag: Dag) -> LineageUtility:
    obj = _read_json(path)
    r = dag.resolve
    return LineageUtility(
        sources=[r(s) for s in obj["sources"]],
        copies={r(c): r(s) for c, s in obj["copies"].items()},
        gains={r(k): v for k, v in obj["gains"].items()},
        noise_penalty={r(k): v for k, v in obj.get("noise_penalty", {}).items()},
        n_players=len(dag.labels),
    )


def atomic_write(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(rows: Iterable[Sequence], header: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _num(x: float):
    return None if x is None or (isinstance(x, float) and math.isnan(x)) else float(x)


def report_rows(report: ValueReport, labels: Sequence[str]):
    for lab, v, se in zip(labels, report.values, report.std_errors):
        yield lab, repr(float(v)), repr(float(se)), report.n_samples


def report_to_csv(report: ValueReport, labels: Sequence[str]) -> str:
    return _csv(report_rows(report, labels), ["player", "value", "std_error", "n_samples"])


def report_to_json(report: ValueReport, labels: Sequence[str], groups=None) -> str:
    obj = {
        "players": list(labels),
        "values": [float(v) for v in report.values],
        "std_errors": [float(v) for v in report.std_errors],
        "n_samples": report.n_samples,
        "method": report.method,
        "total_check": {"utility_gain": report.total_utility, "value_sum": report.value_sum},
    }
    if groups is not None:
        obj["groups"] = {g: {"value": v, "std_error": se} for g, (v, se) in groups.items()}
    return json.dumps(obj, indent=2) + "\n"


def groups_to_csv(groups: Mapping, n_samples: int) -> str:
    rows = [(g, repr(float(v)), repr(float(se)), n_samples) for g, (v, se) in groups.items()]
    return _csv(rows, ["group", "value", "std_error", "n_samples"])


def curve_to_csv(curve: PositionCurve) -> str:
    return _csv(((g, s, repr(m), c) for g, s, m, c in curve.rows()),
                ["group", "position", "mean_marginal", "count"])


def sweep_rows(grid, reports, labels, reference: ValueReport | None = None):
    for b, rep in zip(grid, reports):
        for lab, v, se in zip(labels, rep.values, rep.std_errors):
            yield repr(float(b)), lab, repr(float(v)), repr(float(se)), "false"
    if reference is not None:
        for lab, v, se in zip(labels, reference.values, reference.std_errors):
            yield "inf", lab, repr(float(v)), repr(float(se)), "true"


def sweep_to_csv(grid, reports, labels, reference=None) -> str:
    return _csv(sweep_rows(grid, reports, labels, reference),
                ["grid_b", "player_or_group", "value", "std_error", "reference"])


def sweep_to_json(grid, reports, labels, reference=None) -> str:
    obj = {
        "players": list(labels),
        "grid": [float(b) for b in grid],
        "values": [[float(v) for v in r.values] for r in reports],
        "std_errors": [[float(v) for v in r.std_errors] for r in reports],
    }
    if reference is not None:
        obj["reference"] = [float(v) for v in reference.values]
    return json.dumps(obj, indent=2) + "\n"


def samples_to_jsonl(samples, labels: Sequence[str]) -> str:
    return "".join(json.dumps([labels[i] for i in s]) + "\n" for s in samples)
