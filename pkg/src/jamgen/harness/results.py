"""Result tables, atomic CSV persistence, and CI-aware curve comparison."""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

CSV_HEADER = "sweep,metric,estimate,ci_low,ci_high,n,seed"


@dataclass
class Row:
    sweep: float
    metric: str
    estimate: float
    ci_low: float
    ci_high: float
    n: int
    seed: int

    def __post_init__(self):
        if not self.ci_low <= self.estimate <= self.ci_high:
            raise ValueError(
                f"estimate {self.estimate} outside CI [{self.ci_low}, {self.ci_high}]")


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)

    def add(self, sweep, metric, est, seed):
        self.rows.append(Row(float(sweep), metric, est.value, est.ci_low,
                             est.ci_high, est.n, seed))

    def metrics(self) -> set:
        return {r.metric for r in self.rows}

    def sweep_values(self, metric: str | None = None) -> list:
        return sorted({r.sweep for r in self.rows
                       if metric is None or r.metric == metric})

    def get(self, sweep, metric) -> Row:
        for r in self.rows:
            if r.sweep == sweep and r.metric == metric:
                return r
        raise KeyError((sweep, metric))

    def to_csv(self, path):
        """Atomic write: temp file in the target directory, then rename."""
        path = Path(path)
        lines = [CSV_HEADER]
        for r in self.rows:
            lines.append(",".join([repr(float(r.sweep)), r.metric,
                                   repr(float(r.estimate)), repr(float(r.ci_low)),
                                   repr(float(r.ci_high)), str(r.n), str(r.seed)]))
        fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="\n") as f:
                f.write("\n".join(lines) + "\n")
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def from_csv(cls, path) -> "ResultTable":
        table = cls()
        with open(path, newline="\n") as f:
            header = f.readline().strip()
            if header != CSV_HEADER:
                raise ValueError(f"unexpected CSV header: {header!r}")
            for line in f:
                sweep, metric, est, lo, hi, n, seed = line.rstrip("\n").split(",")
                table.rows.append(Row(float(sweep), metric, float(est), float(lo),
                                      float(hi), int(n), int(seed)))
        return table


def compare(table_a: ResultTable, table_b: ResultTable, metric_a: str,
            metric_b: str | None = None) -> list[dict]:
    """Per-point ordering of two curves with CI-disjointness significance."""
    metric_b = metric_b or metric_a
    xs_a = table_a.sweep_values(metric_a)
    xs_b = table_b.sweep_values(metric_b)
    if xs_a != xs_b:
        raise ValueError(f"sweep axes differ: {xs_a} vs {xs_b}")
    report = []
    for x in xs_a:
        ra, rb = table_a.get(x, metric_a), table_b.get(x, metric_b)
        if ra.estimate > rb.estimate:
            order = ">"
        elif ra.estimate < rb.estimate:
            order = "<"
        else:
            order = "="
        significant = ra.ci_low > rb.ci_high or rb.ci_low > ra.ci_high
        report.append({"sweep": x, "order": order, "significant": significant,
                       "a": ra.estimate, "b": rb.estimate})
    return report


def format_comparison(report: list[dict], label_a: str = "a", label_b: str = "b") -> str:
    lines = [f"{'sweep':>10}  {label_a:>12}  {label_b:>12}  order  significant"]
    for r in report:
        lines.append(f"{r['sweep']:>10g}  {r['a']:>12.6g}  {r['b']:>12.6g}  "
                     f"{r['order']:^5}  {str(r['significant']).lower()}")
    return "\n".join(lines)
