"""Trial-record and summary files.

Trial records are JSON lines, one object per trial with keys in a fixed
order.  Summaries are single JSON documents that carry the tool version and
the full run configuration.  Both are written with stable formatting so
identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from rholab import __version__

OUT_ENV = "RHO_LAB_OUT"
DEFAULT_OUT_DIR = "runs"


class InputFileError(RuntimeError):
    """A file needed as input is missing or unreadable."""


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, DEFAULT_OUT_DIR))


def _py(v):
    if isinstance(v, np.generic):
        return v.item()
    return v


def iter_rows(columns: Mapping[str, np.ndarray], keys: Sequence[str]) -> Iterable[dict]:
    cols = [columns[key].tolist() for key in keys]
    for row in zip(*cols):
        yield dict(zip(keys, row))


def write_jsonl(path: Path, columns: Mapping[str, np.ndarray], keys: Sequence[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in iter_rows(columns, keys):
            fh.write(json.dumps(row, separators=(",", ":")))
            fh.write("\n")
    return path


def write_csv(path: Path, columns: Mapping[str, np.ndarray], keys: Sequence[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for row in iter_rows(columns, keys):
            w.writerow([row[key] for key in keys])
    return path


def read_jsonl(path: Path) -> list[dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]
    except (OSError, json.JSONDecodeError) as exc:
        raise InputFileError(f"{path}: {exc}") from exc


def _jsonable(obj):
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return _py(obj)


def write_summary(path: Path, config: Mapping, payload: Mapping) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"tool": "rholab", "version": __version__, "config": _jsonable(config)}
    doc.update(_jsonable(payload))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    return path


def read_summary(path: Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise InputFileError(f"missing summary file: {path}") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise InputFileError(f"corrupted summary file: {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputFileError(f"corrupted summary file: {path}: not a JSON object")
    return doc


def summary_path(data_path: Path) -> Path:
    data_path = Path(data_path)
    return data_path.with_name(data_path.stem + ".summary.json")
