"""CSV and manifest writers."""
from __future__ import annotations

import csv
import json
import platform
from pathlib import Path

import numpy as np
import scipy

from . import __version__

PROBABILITY_COLUMNS = ("step", "t", "step_prob", "cumulative_prob", "log10_cumulative_prob", "scale")


def write_rows(path, rows, columns=None) -> None:
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns))
        w.writeheader()
        for r in rows:
            w.writerow(r)


def probability_rows(times, log_success, scales):
    """Rows of the probability table; step probabilities come from log differences."""
    logs = np.asarray(log_success, dtype=float)
    step = np.exp(np.diff(logs, prepend=logs[0]))
    for j, t in enumerate(times):
        yield {"step": j, "t": repr(float(t)), "step_prob": repr(float(step[j])),
               "cumulative_prob": repr(float(np.exp(logs[j]))),
               "log10_cumulative_prob": repr(float(logs[j] / np.log(10.0))),
               "scale": repr(float(scales[j]))}


def write_probability_csv(path, times, log_success, scales) -> None:
    write_rows(path, probability_rows(times, log_success, scales), PROBABILITY_COLUMNS)


def time_tag(t: float) -> str:
    return f"{t:.6g}".replace(".", "p").replace("-", "m")


def versions() -> dict:
    return {"pitepde": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def write_manifest(out_dir, command: str, config: dict, metrics=(), extra=None) -> Path:
    path = Path(out_dir) / "manifest.json"
    body = {"command": command, "versions": versions(), "config": config,
            "metrics": [m.row() if hasattr(m, "row") else m for m in metrics]}
    if extra:
        body.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
