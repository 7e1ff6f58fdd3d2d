"""Delimited text I/O for datasets, centroids and result tables."""
from __future__ import annotations

import csv
import dataclasses
import math
from pathlib import Path

import numpy as np

from .bench import MetricRecord, RunSeries, SUMMARY_METRICS


class DataFormatError(ValueError):
    """Malformed dataset file."""


def load_dataset(path, delimiter: str = ",", has_header: bool = False) -> np.ndarray:
    rows = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for lineno, fields in enumerate(reader, start=1):
            if has_header and lineno == 1:
                continue
            if not fields or all(not f.strip() for f in fields):
                continue
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise DataFormatError(
                    f"{path}: row {lineno} has {len(fields)} fields, expected {width}")
            row = []
            for col, text in enumerate(fields, start=1):
                try:
                    value = float(text)
                except ValueError:
                    raise DataFormatError(
                        f"{path}: row {lineno}, column {col}: cannot parse {text!r} as a number"
                    ) from None
                if not math.isfinite(value):
                    raise DataFormatError(f"{path}: row {lineno}, column {col}: non-finite value {text!r}")
                row.append(value)
            rows.append(row)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def fmt(value) -> str:
    """Round-trip text for numbers; empty for missing values."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return ""
        return repr(float(value))
    return str(value)


def save_dataset(X, path, delimiter: str = ",") -> None:
    X = np.asarray(X, dtype=np.float64)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for row in X:
            fh.write(delimiter.join(repr(float(v)) for v in row) + "\n")


def save_labels(labels, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(f"{int(v)}\n" for v in labels)


RECORD_FIELDS = [f.name for f in dataclasses.fields(MetricRecord)]
_INT_FIELDS = {"k", "repetition", "n_d", "s", "n_s"}
_STR_FIELDS = {"dataset", "algorithm"}

SUMMARY_FIELDS = (["dataset", "k", "algorithm", "n_exec", "f_star", "f_bar"]
                  + [f"{m}_{stat}" for m in SUMMARY_METRICS for stat in ("med", "std", "min", "max")]
                  + ["s", "T", "T1", "T2", "succ"])


def summary_path(path) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}_summary{path.suffix or '.csv'}")


def _write(path, header, rows, delimiter):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(delimiter.join(header) + "\n")
        for row in rows:
            fh.write(delimiter.join(fmt(v) for v in row) + "\n")


def save_results(series: list, path, delimiter: str = ",") -> Path:
    """Write one line per run to ``path`` and one line per series to its ``_summary`` sibling.

    The summary columns follow the per-dataset result tables: for each metric
    its median, sample standard deviation, minimum and maximum, then the run
    parameters (sample size, budget, hybrid split) and the success flag.
    Returns the summary path.
    """
    rows = [[getattr(r, name) for name in RECORD_FIELDS] for s in series for r in s.records]
    _write(path, RECORD_FIELDS, rows, delimiter)

    summary_rows = []
    for s in series:
        first = s.records[0]
        row = [first.dataset, first.k, first.algorithm, len(s.records), first.f_star, s.f_bar]
        for metric in SUMMARY_METRICS:
            st = s.summary[metric]
            row += [st["median"], st["std"], st["min"], st["max"]]
        row += [first.s, first.T, first.T1, first.T2, s.succ]
        summary_rows.append(row)
    spath = summary_path(path)
    _write(spath, SUMMARY_FIELDS, summary_rows, delimiter)
    return spath


def _parse(name, text):
    if name in _STR_FIELDS:
        return text
    if text == "":
        return None
    if name in _INT_FIELDS:
        return int(text)
    return float(text)


def load_results(path, delimiter: str = ",") -> list:
    """Read back the per-run records written by ``save_results``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = next(reader)
        if header != RECORD_FIELDS:
            raise DataFormatError(f"{path}: unexpected header {header}")
        return [MetricRecord(**{n: _parse(n, v) for n, v in zip(header, row)}) for row in reader]
