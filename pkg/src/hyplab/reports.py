"""ConvergenceReport: per-n rows plus a verdict, serialized to JSON and CSV."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


@dataclass
class ConvergenceReport:
    experiment: str
    params: dict
    columns: tuple
    rows: list
    verdict: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    @property
    def passed(self) -> bool:
        return bool(self.verdict.get("pass", True))

    def to_dict(self) -> dict:
        return _jsonable(
            {"experiment": self.experiment, "params": self.params, "rows": self.rows, "verdict": self.verdict}
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for r in self.rows:
            writer.writerow([_fmt(r[c]) for c in self.columns])
        return buf.getvalue()


def trailing_slope(xs, ys, frac: float = 0.5) -> float:
    """Least-squares slope over the trailing fraction of the points."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    k = max(2, int(math.ceil(len(xs) * frac)))
    if len(xs) < 2:
        return 0.0
    return float(np.polyfit(xs[-k:], ys[-k:], 1)[0])
