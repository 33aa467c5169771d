"""Curve records and their CSV form.

One row per (experiment, method, n, noise level, seed) cell::

    experiment_id,method,n,noise_kind,noise_level,seed,metric,risk,condition,wall_ms

A failed cell keeps its row: ``risk`` is ``nan`` and ``condition`` holds
``error:<ExceptionName>``.  Floats are written with ``repr`` so that rows
round-trip exactly and reruns are byte-identical.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace

__all__ = ["CurveRecord", "FIELDS", "METRICS", "sort_records", "write_csv", "read_csv",
           "records_to_csv_text"]

FIELDS = ("experiment_id", "method", "n", "noise_kind", "noise_level", "seed",
          "metric", "risk", "condition", "wall_ms")
METRICS = ("MSE", "ExcessMSE", "ClassificationError")


@dataclass(frozen=True)
class CurveRecord:
    experiment_id: str
    method: str
    n: int
    noise_kind: str
    noise_level: float
    seed: int
    metric: str
    risk: float
    condition: float | None = None
    wall_ms: float = 0.0
    error: str | None = None

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.error is None:
            if not self.risk >= 0:
                raise ValueError(f"risk must be >= 0, got {self.risk}")
            if self.metric == "ClassificationError" and self.risk > 1:
                raise ValueError("classification error above 1")

    @property
    def ok(self) -> bool:
        return self.error is None

    @classmethod
    def failed(cls, experiment_id, method, n, noise_kind, noise_level, seed, metric,
               error: str, wall_ms: float = 0.0) -> "CurveRecord":
        return cls(experiment_id, method, int(n), noise_kind, float(noise_level), int(seed),
                   metric, float("nan"), None, wall_ms, error)

    def key(self):
        return (self.experiment_id, self.method, self.noise_level, self.n, self.seed)

    def without_timing(self) -> "CurveRecord":
        return replace(self, wall_ms=0.0)


def sort_records(records) -> list:
    return sorted(records, key=CurveRecord.key)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _row(r: CurveRecord) -> list:
    cond = f"error:{r.error}" if r.error is not None else _fmt(r.condition)
    return [r.experiment_id, r.method, str(r.n), r.noise_kind, _fmt(float(r.noise_level)),
            str(r.seed), r.metric, _fmt(float(r.risk)), cond, _fmt(float(r.wall_ms))]


def records_to_csv_text(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELDS)
    for r in sort_records(records):
        w.writerow(_row(r))
    return buf.getvalue()


def write_csv(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(records_to_csv_text(records))


def read_csv(path) -> list:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != FIELDS:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        for row in reader:
            cond = row["condition"]
            error = cond[len("error:"):] if cond.startswith("error:") else None
            condition = None if (error is not None or cond == "") else float(cond)
            risk = float(row["risk"])
            if error is None and math.isnan(risk):
                error = "unknown"
            out.append(CurveRecord(row["experiment_id"], row["method"], int(row["n"]),
                                   row["noise_kind"], float(row["noise_level"]),
                                   int(row["seed"]), row["metric"], risk, condition,
                                   float(row["wall_ms"]), error))
    return out
