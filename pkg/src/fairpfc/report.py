"""Checklist reports, dataset statistics and curve export."""

from __future__ import annotations

import csv
import enum
import io
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from fairpfc import plotting
from fairpfc.aggregation import AggregationOutcome, AggregationSpec, describe, format_exponent
from fairpfc.dataset_io import DatasetSchema, GroupedConfusions, PredictionRecord, Source, _read_text
from fairpfc.errors import ParseError
from fairpfc.group_metrics import BaseMetricKind, confusions_from_records
from fairpfc.tradeoff import AucMode, Frontier, TradeoffPoint, pareto_frontier

log = logging.getLogger(__name__)


@dataclass
class DatasetStats:
    """Joint y x z counts plus partition sizes."""

    class_names: tuple[str, ...]
    group_names: tuple[str, ...]
    counts: np.ndarray                      # (C, G)
    partitions: dict[str, int]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def joint_percent(self) -> np.ndarray:
        return 100.0 * self.counts / max(self.total, 1)

    def row_percent(self) -> np.ndarray:
        rows = self.counts.sum(axis=1, keepdims=True)
        return 100.0 * np.divide(self.counts, rows, out=np.zeros(self.counts.shape), where=rows > 0)

    def to_csv(self, digits: int = 4) -> str:
        """Rows per class: total, then per-group share of the row and joint share."""
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["class", "total",
                    *[f"row_pct:{g}" for g in self.group_names],
                    *[f"joint_pct:{g}" for g in self.group_names]])
        rp, jp = self.row_percent(), self.joint_percent()
        for c, name in enumerate(self.class_names):
            w.writerow([name, int(self.counts[c].sum()),
                        *[f"{v:.{digits}f}" for v in rp[c]], *[f"{v:.{digits}f}" for v in jp[c]]])
        col = self.counts.sum(axis=0)
        share = 100.0 * col / max(self.total, 1)
        w.writerow(["Total", self.total, *[f"{v:.{digits}f}" for v in share],
                    *[f"{v:.{digits}f}" for v in share]])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "classes": list(self.class_names),
            "groups": list(self.group_names),
            "counts": self.counts.tolist(),
            "joint_percent": np.round(self.joint_percent(), 6).tolist(),
            "row_percent": np.round(self.row_percent(), 6).tolist(),
            "class_totals": self.counts.sum(axis=1).tolist(),
            "group_totals": self.counts.sum(axis=0).tolist(),
            "total": self.total,
            "partitions": self.partitions,
        }


def dataset_stats(dataset: Sequence[PredictionRecord] | GroupedConfusions,
                  schema: DatasetSchema | None = None) -> DatasetStats:
    if isinstance(dataset, GroupedConfusions):
        conf, partitions = dataset, {"all": dataset.total}
    else:
        if schema is None:
            raise ValueError("records need a schema")
        conf = confusions_from_records(dataset, schema)
        split_counts = Counter(r.split.value for r in dataset)
        partitions = {k: split_counts[k] for k in ("train", "dev", "test") if split_counts[k]}
    joint = conf.counts.sum(axis=2).T            # (C, G) by true class
    return DatasetStats(conf.schema.class_names, conf.schema.group_names, joint, partitions)


@dataclass
class ChecklistReport:
    dataset_stats: DatasetStats
    metric: BaseMetricKind
    unit: str
    group_aggregation: dict
    class_aggregation: dict
    config: dict
    outcome: dict | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not self.warnings

    def to_dict(self) -> dict:
        return {
            "complete": self.complete,
            "warnings": self.warnings,
            "config": self.config,
            "checklist": {
                "dataset_statistics": self.dataset_stats.to_dict(),
                "metric": self.metric.value,
                "basic_unit": self.unit,
                "group_aggregation": self.group_aggregation,
                "class_aggregation": self.class_aggregation,
            },
            "outcome": self.outcome,
        }

    def to_markdown(self) -> str:
        ds = self.dataset_stats
        lines = ["# Fairness evaluation checklist", ""]
        if not self.complete:
            lines += ["**Incomplete:** " + "; ".join(self.warnings), ""]
        lines += ["## 1. Dataset statistics", "",
                  f"Instances: {ds.total}; partitions: "
                  + ", ".join(f"{k}={v}" for k, v in ds.partitions.items()), "",
                  "| class | total | " + " | ".join(ds.group_names) + " |",
                  "|---|---:|" + "---:|" * len(ds.group_names)]
        rp = ds.row_percent()
        for c, name in enumerate(ds.class_names):
            cells = " | ".join(f"{v:.2f}%" for v in rp[c])
            lines.append(f"| {name} | {int(ds.counts[c].sum())} | {cells} |")
        share = 100.0 * ds.counts.sum(axis=0) / max(ds.total, 1)
        lines.append(f"| **Total** | {ds.total} | " + " | ".join(f"{v:.2f}%" for v in share) + " |")
        ga, ca = self.group_aggregation, self.class_aggregation
        lines += ["", "## 2. Evaluation metric", "", f"{self.metric.value.upper()}",
                  "", "## 3. Basic unit", "", self.unit,
                  "", "## 4. Group-wise aggregation", "",
                  f"{ga['description']} (p = {ga['p']}, weights = {ga['weights'] or 'uniform'})",
                  "", f"Motivation: {ga['motivation'] or '(missing)'}",
                  "", "## 5. Class-wise aggregation", "", ca["description"],
                  "", f"Motivation: {ca['motivation'] or '(missing)'}"]
        if self.outcome:
            lines += ["", "## Result", "",
                      f"delta = {self.outcome['delta']:.6f}, fairness = {self.outcome['fairness']:.6f}"]
        return "\n".join(lines) + "\n"


def checklist_report(dataset, spec: AggregationSpec, metric: BaseMetricKind,
                     schema: DatasetSchema | None = None, group_motivation: str = "",
                     class_motivation: str = "",
                     outcome: AggregationOutcome | None = None) -> ChecklistReport:
    """Fill the five checklist items; missing motivations mark it incomplete."""
    stats = dataset_stats(dataset, schema)
    group_desc, class_desc = describe(spec)
    warnings = []
    if not group_motivation.strip():
        warnings.append("group-wise aggregation motivation missing")
    if not class_motivation.strip():
        warnings.append("class-wise aggregation motivation missing")
    for w in warnings:
        log.warning("checklist incomplete: %s", w)
    out = None
    if outcome is not None:
        out = {"betas": [round(float(b), 6) for b in outcome.betas],
               "delta": round(outcome.delta, 6), "fairness": round(outcome.fairness, 6)}
    return ChecklistReport(
        dataset_stats=stats,
        metric=BaseMetricKind(metric),
        unit=str(spec.unit),
        group_aggregation={"description": group_desc, "p": format_exponent(spec.group_p),
                           "weights": list(spec.group_weights) if spec.group_weights else None,
                           "motivation": group_motivation.strip()},
        class_aggregation={"description": class_desc, "method": str(spec.class_method),
                           "motivation": class_motivation.strip()},
        config={"metric": BaseMetricKind(metric).value, **spec.as_dict()},
        outcome=out,
        warnings=warnings,
    )


# -- curves ------------------------------------------------------------------

class CurveFormat(str, enum.Enum):
    DELIMITED = "delimited"
    SVG = "svg"


def export_curve(frontier: Frontier, fmt: CurveFormat = CurveFormat.DELIMITED,
                 mode: AucMode = AucMode.STEP) -> bytes:
    if CurveFormat(fmt) is CurveFormat.SVG:
        return plotting.tradeoff_figure({"frontier": frontier}, mode=mode, fmt="svg")
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["performance", "fairness"])
    for p in frontier:
        w.writerow([repr(p.performance), repr(p.fairness)])
    return buf.getvalue().encode("utf-8")


def parse_points(source: Source) -> list[TradeoffPoint]:
    """Read a ``performance,fairness`` CSV (extra columns and ``#`` lines ignored)."""
    reader = csv.reader(io.StringIO(_read_text(source), newline=""))
    header = None
    points = []
    for row in reader:
        if not row or all(not c.strip() for c in row) or row[0].lstrip().startswith("#"):
            continue
        if header is None:
            header = [c.strip() for c in row]
            for col in ("performance", "fairness"):
                if col not in header:
                    raise ParseError(f"header is missing column {col!r}", line=reader.line_num)
            ip, jf = header.index("performance"), header.index("fairness")
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=reader.line_num)
        try:
            points.append(TradeoffPoint(float(row[ip]), float(row[jf])))
        except ValueError as exc:
            msg = getattr(exc, "message", str(exc))
            raise ParseError(msg, line=reader.line_num) from None
    if header is None:
        raise ParseError("missing header row", line=1)
    return points


def parse_frontier(source: Source) -> Frontier:
    return pareto_frontier(parse_points(source))


def frontier_dict(frontier: Frontier) -> list[list[float]]:
    return [[p.performance, p.fairness] for p in frontier]

