"""Model selection over hyperparameter sweeps and method comparison.

Selection always runs on development-set points; the chosen configuration
is then reported with its test-set statistics. Frontiers and AUC in the
comparison table use test points only.
"""

from __future__ import annotations

import csv
import enum
import io
import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from fairpfc.dataset_io import Source, _read_text
from fairpfc.errors import InfeasibleSelectionError, InputError, ParseError
from fairpfc.tradeoff import (UNIT_UTOPIA, AucMode, Frontier, TradeoffPoint, UtopiaPoint,
                              auc_pfc, dto, pareto_frontier)

BASELINE_METHOD = "vanilla"
TIE_TOL = 1e-12

MANIFEST_FIELDS = ("method", "config_id", "seed", "trade_off_param", "dev_performance",
                   "dev_fairness", "test_performance", "test_fairness")


@dataclass(frozen=True)
class CandidateRun:
    method: str
    config_id: str
    seed: int
    dev: TradeoffPoint
    test: TradeoffPoint
    trade_off_param: float | None = None
    dev_loss: float | None = None


@dataclass(frozen=True)
class ConfigSummary:
    """Seed-averaged statistics of one (method, config_id)."""

    method: str
    config_id: str
    n_seeds: int
    dev: TradeoffPoint
    test: TradeoffPoint
    dev_std: tuple[float, float]
    test_std: tuple[float, float]
    trade_off_param: float | None = None
    dev_loss: float | None = None


class CriterionKind(str, enum.Enum):
    MIN_DTO = "min_dto"
    MAX_PERFORMANCE = "max_performance"
    MAX_FAIRNESS = "max_fairness"
    PERF_AT_FAIRNESS_GAIN = "perf_at_fairness_gain"
    FAIRNESS_AT_PERF_LOSS = "fairness_at_perf_loss"
    MIN_LOSS = "min_loss"


@dataclass(frozen=True)
class SelectionCriterion:
    kind: CriterionKind
    pp: float | None = None
    utopia: UtopiaPoint = UNIT_UTOPIA

    def __post_init__(self):
        object.__setattr__(self, "kind", CriterionKind(self.kind))
        if self.constrained:
            if self.pp is None or not 0 < self.pp < 1:
                raise InputError(f"{self.kind.value} needs a threshold in (0, 1), got {self.pp}")
        elif self.pp is not None:
            raise InputError(f"{self.kind.value} takes no threshold")

    @property
    def constrained(self) -> bool:
        return self.kind in (CriterionKind.PERF_AT_FAIRNESS_GAIN,
                             CriterionKind.FAIRNESS_AT_PERF_LOSS)

    @property
    def label(self) -> str:
        if self.kind is CriterionKind.PERF_AT_FAIRNESS_GAIN:
            return f"P@F+{_pct(self.pp)}"
        if self.kind is CriterionKind.FAIRNESS_AT_PERF_LOSS:
            return f"F@P-{_pct(self.pp)}"
        return {CriterionKind.MIN_DTO: "DTO", CriterionKind.MAX_PERFORMANCE: "P",
                CriterionKind.MAX_FAIRNESS: "F", CriterionKind.MIN_LOSS: "LOSS"}[self.kind]


def _pct(x: float) -> str:
    return f"{x * 100:g}%"


def standard_criteria() -> list[SelectionCriterion]:
    """The seven columns: DTO, P, P@F+5%, P@F+10%, F, F@P-5%, F@P-10%."""
    K = CriterionKind
    return [
        SelectionCriterion(K.MIN_DTO),
        SelectionCriterion(K.MAX_PERFORMANCE),
        SelectionCriterion(K.PERF_AT_FAIRNESS_GAIN, 0.05),
        SelectionCriterion(K.PERF_AT_FAIRNESS_GAIN, 0.10),
        SelectionCriterion(K.MAX_FAIRNESS),
        SelectionCriterion(K.FAIRNESS_AT_PERF_LOSS, 0.05),
        SelectionCriterion(K.FAIRNESS_AT_PERF_LOSS, 0.10),
    ]


def parse_criterion(text: str) -> SelectionCriterion:
    """Parse ``DTO``, ``P``, ``F``, ``LOSS``, ``P@F+5%`` or ``F@P-0.1`` style labels."""
    t = text.strip().upper().replace(" ", "")
    simple = {"DTO": CriterionKind.MIN_DTO, "P": CriterionKind.MAX_PERFORMANCE,
              "F": CriterionKind.MAX_FAIRNESS, "LOSS": CriterionKind.MIN_LOSS}
    if t in simple:
        return SelectionCriterion(simple[t])
    for prefix, kind in (("P@F+", CriterionKind.PERF_AT_FAIRNESS_GAIN),
                         ("F@P-", CriterionKind.FAIRNESS_AT_PERF_LOSS)):
        if t.startswith(prefix):
            return SelectionCriterion(kind, parse_fraction(t[len(prefix):]))
    raise InputError(f"unknown selection criterion {text!r}")


def parse_fraction(text: str) -> float:
    """``0.82`` or ``82%`` -> 0.82."""
    t = str(text).strip()
    try:
        if t.endswith("%"):
            return float(t[:-1]) / 100.0
        return float(t)
    except ValueError:
        raise InputError(f"not a number or percentage: {text!r}") from None


# -- manifest ----------------------------------------------------------------

def parse_manifest(source: Source) -> list[CandidateRun]:
    """Parse a JSON-lines manifest, one run object per non-blank line."""
    runs: list[CandidateRun] = []
    seen: dict[tuple[str, str, int], int] = {}
    for lineno, line in enumerate(_read_text(source).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=lineno, field=exc.colno) from None
        if not isinstance(obj, dict):
            raise ParseError("each line must be a JSON object", line=lineno)
        missing = [k for k in MANIFEST_FIELDS if k not in obj and k != "trade_off_param"]
        if missing:
            raise ParseError(f"missing field(s) {missing}", line=lineno)
        try:
            run = CandidateRun(
                method=str(obj["method"]),
                config_id=str(obj["config_id"]),
                seed=int(obj["seed"]),
                dev=TradeoffPoint(float(obj["dev_performance"]), float(obj["dev_fairness"])),
                test=TradeoffPoint(float(obj["test_performance"]), float(obj["test_fairness"])),
                trade_off_param=_opt_float(obj.get("trade_off_param")),
                dev_loss=_opt_float(obj.get("dev_loss")),
            )
        except (TypeError, ValueError) as exc:
            msg = exc.message if isinstance(exc, InputError) else str(exc)
            raise ParseError(msg, line=lineno) from None
        key = (run.method, run.config_id, run.seed)
        if key in seen:
            raise ParseError(f"duplicate run {key} (first at line {seen[key]})", line=lineno)
        seen[key] = lineno
        runs.append(run)
    return runs


def _opt_float(v):
    return None if v is None else float(v)


def export_manifest(runs: Iterable[CandidateRun]) -> bytes:
    lines = []
    for r in runs:
        obj = {"method": r.method, "config_id": r.config_id, "seed": r.seed,
               "trade_off_param": r.trade_off_param,
               "dev_performance": r.dev.performance, "dev_fairness": r.dev.fairness,
               "test_performance": r.test.performance, "test_fairness": r.test.fairness}
        if r.dev_loss is not None:
            obj["dev_loss"] = r.dev_loss
        lines.append(json.dumps(obj))
    return ("\n".join(lines) + "\n").encode("utf-8")


def load_manifest(path: str | Path) -> list[CandidateRun]:
    return parse_manifest(Path(path).read_bytes())


# -- aggregation over seeds --------------------------------------------------

def _mean_std(xs: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(xs, dtype=float)
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return mean, std


def group_by_config(runs: Iterable[CandidateRun], per_seed: bool = False) -> list[ConfigSummary]:
    """Seed-averaged dev/test points per (method, config_id).

    Standard deviations use the n-1 denominator and are 0 for a single seed.
    With ``per_seed`` every run stays its own candidate, named ``config#seed``.
    """
    runs = list(runs)
    if not runs:
        raise InputError("manifest is empty")
    buckets: dict[tuple[str, str], list[CandidateRun]] = defaultdict(list)
    for r in runs:
        cid = f"{r.config_id}#{r.seed}" if per_seed else r.config_id
        buckets[(r.method, cid)].append(r)
    out = []
    for (method, cid), rs in sorted(buckets.items()):
        rs.sort(key=lambda r: r.seed)          # summation order independent of input order
        dp, dps = _mean_std([r.dev.performance for r in rs])
        df, dfs = _mean_std([r.dev.fairness for r in rs])
        tp, tps = _mean_std([r.test.performance for r in rs])
        tf, tfs = _mean_std([r.test.fairness for r in rs])
        params = {r.trade_off_param for r in rs}
        losses = [r.dev_loss for r in rs]
        out.append(ConfigSummary(
            method=method, config_id=cid, n_seeds=len(rs),
            dev=TradeoffPoint(_clip01(dp), _clip01(df)), test=TradeoffPoint(_clip01(tp), _clip01(tf)),
            dev_std=(dps, dfs), test_std=(tps, tfs),
            trade_off_param=params.pop() if len(params) == 1 else None,
            dev_loss=float(np.mean(losses)) if all(v is not None for v in losses) else None,
        ))
    return out


def _clip01(x: float) -> float:
    # Means of values in [0, 1] can drift past the ends by an ulp.
    return min(max(x, 0.0), 1.0)


# -- selection ---------------------------------------------------------------

@dataclass(frozen=True)
class SelectionResult:
    method: str
    criterion: str
    chosen_config: str
    dev_point: TradeoffPoint
    test_point: TradeoffPoint
    test_std: tuple[float, float]
    test_dto: float
    n_feasible: int = 0

    def as_dict(self, digits: int = 6) -> dict:
        return {
            "method": self.method, "criterion": self.criterion,
            "chosen_config": self.chosen_config,
            "dev_performance": round(self.dev_point.performance, digits),
            "dev_fairness": round(self.dev_point.fairness, digits),
            "test_performance": round(self.test_point.performance, digits),
            "test_fairness": round(self.test_point.fairness, digits),
            "test_performance_std": round(self.test_std[0], digits),
            "test_fairness_std": round(self.test_std[1], digits),
            "test_dto": round(self.test_dto, digits),
            "n_feasible": self.n_feasible,
        }


def baseline_point(configs: Iterable[ConfigSummary], method: str = BASELINE_METHOD) -> TradeoffPoint:
    """Dev point of the baseline method; its highest-performance config if several."""
    cands = [c for c in configs if c.method == method]
    if not cands:
        raise InputError(f"no {method!r} runs in the manifest to anchor constrained criteria; "
                         "pass an explicit baseline")
    best = min(cands, key=lambda c: (-c.dev.performance, -c.dev.fairness, c.config_id))
    return best.dev


def feasible(configs: Sequence[ConfigSummary], criterion: SelectionCriterion,
             baseline: TradeoffPoint | None) -> list[ConfigSummary]:
    kind = criterion.kind
    if not criterion.constrained:
        if kind is CriterionKind.MIN_LOSS:
            missing = [c.config_id for c in configs if c.dev_loss is None]
            if missing:
                raise InputError(f"min_loss needs dev_loss on every run; missing for {missing[:3]}")
        return list(configs)
    if baseline is None:
        raise InputError(f"criterion {criterion.label} needs a baseline point")
    if kind is CriterionKind.PERF_AT_FAIRNESS_GAIN:
        floor = baseline.fairness + criterion.pp
        return [c for c in configs if c.dev.fairness >= floor - TIE_TOL]
    floor = baseline.performance - criterion.pp
    return [c for c in configs if c.dev.performance >= floor - TIE_TOL]


def _objective(c: ConfigSummary, criterion: SelectionCriterion) -> float:
    """Value to minimise."""
    kind = criterion.kind
    if kind is CriterionKind.MIN_DTO:
        return dto(c.dev, criterion.utopia)
    if kind in (CriterionKind.MAX_PERFORMANCE, CriterionKind.PERF_AT_FAIRNESS_GAIN):
        return -c.dev.performance
    if kind in (CriterionKind.MAX_FAIRNESS, CriterionKind.FAIRNESS_AT_PERF_LOSS):
        return -c.dev.fairness
    return c.dev_loss


def select(configs: Sequence[ConfigSummary], criterion: SelectionCriterion,
           baseline: TradeoffPoint | None = None) -> SelectionResult:
    """Pick one configuration of a single method by its dev statistics.

    Ties go to the higher dev fairness, then to the smaller config_id.
    """
    configs = list(configs)
    if not configs:
        raise InputError("no configurations to select from")
    methods = {c.method for c in configs}
    if len(methods) != 1:
        raise InputError(f"select expects one method, got {sorted(methods)}")
    pool = feasible(configs, criterion, baseline)
    if not pool:
        if criterion.kind is CriterionKind.PERF_AT_FAIRNESS_GAIN:
            what = f"dev fairness >= {baseline.fairness + criterion.pp:.6f}"
        else:
            what = f"dev performance >= {baseline.performance - criterion.pp:.6f}"
        raise InfeasibleSelectionError(
            f"{methods.pop()}: no configuration satisfies {criterion.label} ({what})")
    chosen = min(pool, key=lambda c: (_objective(c, criterion), -c.dev.fairness, c.config_id))
    return SelectionResult(
        method=chosen.method, criterion=criterion.label, chosen_config=chosen.config_id,
        dev_point=chosen.dev, test_point=chosen.test, test_std=chosen.test_std,
        test_dto=dto(chosen.test, UNIT_UTOPIA), n_feasible=len(pool),
    )


# -- comparison --------------------------------------------------------------

@dataclass
class MethodRow:
    method: str
    results: dict[str, SelectionResult | None]
    infeasible: dict[str, str]
    frontier: Frontier
    auc: float


@dataclass
class ComparisonTable:
    criteria: list[str]
    rows: list[MethodRow]
    auc_mode: AucMode
    baseline: TradeoffPoint | None
    best: dict[str, list[str]] = field(default_factory=dict)
    ties: dict[str, bool] = field(default_factory=dict)

    def winners(self) -> dict[str, list[str]]:
        return dict(self.best)

    def auc_order(self) -> list[str]:
        return [r.method for r in sorted(self.rows, key=lambda r: (-r.auc, r.method))]

    def to_dict(self, digits: int = 6) -> dict:
        return {
            "auc_mode": self.auc_mode.value,
            "utopia": UNIT_UTOPIA.as_dict(),
            "baseline": None if self.baseline is None else
            {"performance": self.baseline.performance, "fairness": self.baseline.fairness},
            "criteria": self.criteria,
            "best": self.best,
            "ties": self.ties,
            "methods": [
                {
                    "method": r.method,
                    "auc": round(r.auc, digits),
                    "frontier": [[p.performance, p.fairness] for p in r.frontier],
                    "selections": {k: (v.as_dict(digits) if v else None)
                                   for k, v in r.results.items()},
                    "infeasible": r.infeasible,
                }
                for r in self.rows
            ],
        }

    def to_csv(self, digits: int = 6) -> str:
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", *self.criteria, "AUC"])
        for r in self.rows:
            cells = []
            for k in self.criteria:
                res = r.results[k]
                text = "NA" if res is None else f"{res.test_dto:.{digits}f}"
                if r.method in self.best.get(k, []):
                    text += "*"
                cells.append(text)
            auc = f"{r.auc:.{digits}f}" + ("*" if r.method in self.best.get("AUC", []) else "")
            w.writerow([r.method, *cells, auc])
        return buf.getvalue()


def _flag_best(values: dict[str, float], larger: bool) -> tuple[list[str], bool]:
    if not values:
        return [], False
    target = max(values.values()) if larger else min(values.values())
    best = sorted(m for m, v in values.items() if abs(v - target) <= TIE_TOL)
    return best, len(best) > 1


def compare_methods(runs: Iterable[CandidateRun], criteria: Sequence[SelectionCriterion] | None = None,
                    auc_mode: AucMode = AucMode.STEP, baseline: TradeoffPoint | None = None,
                    baseline_method: str = BASELINE_METHOD, per_seed: bool = False) -> ComparisonTable:
    """Select under every criterion for every method and add test-set AUC.

    Each criterion column flags the smallest test DTO; the AUC column flags
    the largest area. Infeasible constrained selections stay as gaps.
    """
    criteria = list(criteria) if criteria is not None else standard_criteria()
    if not criteria:
        raise InputError("at least one criterion is required")
    auc_mode = AucMode(auc_mode)
    summaries = group_by_config(runs, per_seed=per_seed)
    if baseline is None and any(c.constrained for c in criteria):
        baseline = baseline_point(summaries, baseline_method)
    by_method: dict[str, list[ConfigSummary]] = defaultdict(list)
    for s in summaries:
        if s.method != baseline_method:
            by_method[s.method].append(s)
    if not by_method:
        raise InputError("manifest has no methods besides the baseline")
    rows = []
    for method in sorted(by_method):
        cfgs = by_method[method]
        results: dict[str, SelectionResult | None] = {}
        infeasible: dict[str, str] = {}
        for crit in criteria:
            try:
                results[crit.label] = select(cfgs, crit, baseline)
            except InfeasibleSelectionError as exc:
                results[crit.label] = None
                infeasible[crit.label] = str(exc)
        frontier = pareto_frontier(c.test for c in cfgs)
        rows.append(MethodRow(method, results, infeasible, frontier, auc_pfc(frontier, auc_mode)))
    table = ComparisonTable([c.label for c in criteria], rows, auc_mode, baseline)
    for label in table.criteria:
        vals = {r.method: r.results[label].test_dto for r in rows if r.results[label] is not None}
        table.best[label], table.ties[label] = _flag_best(vals, larger=False)
    table.best["AUC"], table.ties["AUC"] = _flag_best({r.method: r.auc for r in rows}, larger=True)
    return table

