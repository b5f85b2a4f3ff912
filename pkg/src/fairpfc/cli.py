"""Command-line front end: ``fairpfc <command> [options]``.

Exit codes: 0 success, 2 input error, 3 infeasible selection, 4 internal
error. Failures print one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from fairpfc import aggregation as agg
from fairpfc import plotting, report, selection, tradeoff
from fairpfc.dataset_io import (DatasetSchema, Split, export_records, format_schema,
                                load_confusions, load_records, load_schema)
from fairpfc.errors import FairPFCError, InputError
from fairpfc.fixtures import FixtureSpec, divergence_manifest, generate_fixture
from fairpfc.group_metrics import (BaseMetricKind, MeanMode, confusions_from_records,
                                   disaggregated_table, metric_matrix, overall_accuracy)

log = logging.getLogger("fairpfc")

DIGITS = 6


# -- argument helpers --------------------------------------------------------

def fraction(text) -> float:
    """Accept 0.82 or 82% and return 0.82."""
    if isinstance(text, (int, float)):
        return float(text)
    try:
        return selection.parse_fraction(text)
    except InputError as exc:
        raise argparse.ArgumentTypeError(exc.message) from None


def pair(text) -> tuple[float, float]:
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = str(text).split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated values, got {text!r}")
    return fraction(parts[0]), fraction(parts[1])


def float_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [fraction(x) for x in text]
    return [fraction(x) for x in str(text).split(",")]


def matrix_arg(text):
    """``a,b;c,d`` -> [[a, b], [c, d]]; a bare number broadcasts."""
    if isinstance(text, (int, float)):
        return float(text)
    if isinstance(text, list):
        return text
    rows = [r for r in str(text).split(";") if r.strip()]
    if len(rows) == 1 and "," not in rows[0]:
        return fraction(rows[0])
    return [[fraction(x) for x in r.split(",")] for r in rows]


def exponent(text) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    try:
        return agg.parse_exponent(text)
    except InputError as exc:
        raise argparse.ArgumentTypeError(exc.message) from None


def r6(x: float) -> float:
    return round(float(x), DIGITS)


def emit(obj, out: str | None = None):
    text = json.dumps(obj, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def write_text(text: str, out: str | None):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- shared option groups ----------------------------------------------------

def add_dataset_args(p):
    g = p.add_argument_group("dataset")
    g.add_argument("--confusions", help="confusion-matrix file")
    g.add_argument("--records", help="prediction-record CSV")
    g.add_argument("--schema", help="schema file (needed with --records unless --classes/--groups)")
    g.add_argument("--classes", help="comma-separated class names")
    g.add_argument("--groups", help="comma-separated group names")
    g.add_argument("--positive-class", help="positive class name (binary aggregation)")
    g.add_argument("--split", choices=[s.value for s in Split],
                   help="only use records from this split")


def add_metric_args(p):
    p.add_argument("--metric", default="tpr", choices=[k.value for k in BaseMetricKind])
    p.add_argument("--mean-mode", default="pooled", choices=[m.value for m in MeanMode])


def add_spec_args(p):
    g = p.add_argument_group("aggregation")
    g.add_argument("--preset", choices=agg.PRESET_NAMES,
                   help="named aggregation; overrides the custom options below")
    g.add_argument("--gamma", type=fraction, help="slack for threshold presets/units")
    g.add_argument("--unit", choices=[u.value for u in agg.UnitKind], default="gap")
    g.add_argument("--p", type=exponent, default=1.0, help="group exponent, e.g. 2, -inf, +inf")
    g.add_argument("--group-sum", action="store_true", help="sum over groups instead of mean")
    g.add_argument("--weights", type=float_list, help="group weights summing to 1")
    g.add_argument("--class-method", default="mean", choices=[m.value for m in agg.ClassMethod])
    g.add_argument("--class-p", type=exponent, help="class exponent for generalized_mean")
    g.add_argument("--direction", choices=[d.value for d in agg.Direction])


def load_dataset(args):
    """Returns (schema, confusions, records-or-None)."""
    if args.confusions:
        if args.records:
            raise InputError("pass either --confusions or --records, not both")
        conf = load_confusions(args.confusions)
        return conf.schema, conf, None
    if not args.records:
        raise InputError("a dataset is required: --confusions FILE or --records FILE")
    if args.schema:
        schema = load_schema(args.schema)
    elif args.classes and args.groups:
        classes = [c.strip() for c in args.classes.split(",")]
        pos = classes.index(args.positive_class) if args.positive_class in classes else None
        schema = DatasetSchema(tuple(classes), tuple(g.strip() for g in args.groups.split(",")), pos)
    else:
        raise InputError("--records needs --schema or both --classes and --groups")
    records = load_records(args.records, schema)
    if args.split:
        records = [r for r in records if r.split.value == args.split]
    return schema, confusions_from_records(records, schema), records


def build_spec(args, schema: DatasetSchema) -> agg.AggregationSpec:
    mean_mode = MeanMode(args.mean_mode)
    positive = schema.positive_class if schema.positive_class is not None else 1
    if args.preset:
        return agg.preset(args.preset, gamma=args.gamma, positive_class=positive,
                          mean_mode=mean_mode)
    unit_kind = agg.UnitKind(args.unit)
    gamma = args.gamma if unit_kind in (agg.UnitKind.GAP_THRESHOLD,
                                        agg.UnitKind.RATIO_THRESHOLD) else None
    unit = agg.BasicUnit(unit_kind, gamma)
    method = agg.ClassMethod(args.class_method)
    cls = agg.ClassAggregation(method, target=positive if method is agg.ClassMethod.BINARY else None,
                               p=args.class_p)
    direction = args.direction or {
        agg.UnitKind.SCORE: agg.Direction.LARGER_FAIRER,
        agg.UnitKind.GAP: agg.Direction.SMALLER_FAIRER,
        agg.UnitKind.RATIO: agg.Direction.RATIO_AROUND_ONE,
        agg.UnitKind.GAP_THRESHOLD: agg.Direction.LARGER_FAIRER,
        agg.UnitKind.RATIO_THRESHOLD: agg.Direction.LARGER_FAIRER,
    }[unit_kind]
    return agg.AggregationSpec(unit=unit, group_p=args.p, class_method=cls, direction=direction,
                               mean_mode=mean_mode,
                               group_weights=tuple(args.weights) if args.weights else None,
                               group_sum=args.group_sum, name="custom")


def utopia_from(args) -> tradeoff.UtopiaPoint:
    p, f = args.utopia
    return tradeoff.UtopiaPoint(p, f, tuple(args.weights_dto))


# -- commands ----------------------------------------------------------------

def cmd_metrics(args):
    schema, conf, _ = load_dataset(args)
    matrix = metric_matrix(conf, BaseMetricKind(args.metric), MeanMode(args.mean_mode))
    config = {"command": "metrics", "metric": args.metric, "mean_mode": args.mean_mode}
    table = f"# {json.dumps(config)}\n" + disaggregated_table(matrix, schema)
    write_text(table, args.out)
    if args.figure:
        fmt = Path(args.figure).suffix.lstrip(".") or "png"
        plotting.write(args.figure, plotting.metric_heatmap(
            matrix.values, matrix.defined_mask, schema.class_names, schema.group_names,
            title=args.metric.upper(), fmt=fmt))
    return 0


def _outcome_dict(spec, schema, outcome, conf, metric):
    return {
        "config": {"metric": metric, **spec.as_dict()},
        "classes": list(schema.class_names),
        "betas": [r6(b) for b in outcome.betas],
        "delta": r6(outcome.delta),
        "fairness": r6(outcome.fairness),
        "overall_accuracy": r6(overall_accuracy(conf)) if conf.total else None,
    }


def cmd_aggregate(args):
    schema, conf, _ = load_dataset(args)
    spec = build_spec(args, schema)
    matrix = metric_matrix(conf, BaseMetricKind(args.metric), MeanMode(args.mean_mode))
    outcome = agg.aggregate(matrix, spec)
    emit(_outcome_dict(spec, schema, outcome, conf, args.metric), args.out)
    return 0


def cmd_recommend(args):
    answers = agg.DecisionAnswers(args.scope, args.scale, args.focus, args.emphasis)
    spec = agg.recommend(answers)
    group, cls = agg.describe(spec)
    emit({"answers": vars(answers), "spec": spec.as_dict(),
          "group_aggregation": group, "class_aggregation": cls})
    return 0


def _points(args):
    return report.parse_points(Path(args.points).read_bytes())


def cmd_frontier(args):
    points = _points(args)
    frontier = tradeoff.pareto_frontier(points)
    config = {"command": "frontier", "mode": args.mode, "n_points": len(points),
              "utopia": tradeoff.UNIT_UTOPIA.as_dict()}
    text = f"# {json.dumps(config)}\n" + report.export_curve(frontier).decode()
    write_text(text, args.out)
    if args.figure:
        fmt = Path(args.figure).suffix.lstrip(".") or "svg"
        payload = plotting.tradeoff_figure({"frontier": frontier}, mode=args.mode, fmt=fmt,
                                           candidates={"frontier": points})
        plotting.write(args.figure, payload)
    return 0


def cmd_dto(args):
    utopia = utopia_from(args)
    base = {"utopia": utopia.as_dict()}
    if args.points:
        rows = [{"performance": r6(p.performance), "fairness": r6(p.fairness),
                 "dto": r6(tradeoff.dto(p, utopia))} for p in _points(args)]
        emit({**base, "points": rows}, args.out)
        return 0
    if args.performance is None or args.fairness is None:
        raise InputError("dto needs --performance and --fairness, or --points")
    point = tradeoff.TradeoffPoint(args.performance, args.fairness)
    emit({**base, "performance": r6(point.performance), "fairness": r6(point.fairness),
          "dto": r6(tradeoff.dto(point, utopia))}, args.out)
    return 0


def cmd_auc(args):
    frontier = tradeoff.pareto_frontier(_points(args))
    mode = tradeoff.AucMode(args.mode)
    out = {"mode": mode.value, "utopia": tradeoff.UNIT_UTOPIA.as_dict(),
           "frontier": report.frontier_dict(frontier),
           "auc": r6(tradeoff.auc_pfc(frontier, mode))}
    constraints = []
    if args.min_performance is not None:
        constraints.append(tradeoff.min_performance(args.min_performance))
    if args.min_fairness is not None:
        constraints.append(tradeoff.min_fairness(args.min_fairness))
    if args.max_dto is not None:
        constraints.append(tradeoff.max_dto(args.max_dto, utopia_from(args)))
    out["partial"] = [
        {"constraint": c.as_dict(), "resolution": args.resolution,
         "auc": r6(tradeoff.partial_auc_pfc(frontier, c, mode, args.resolution))}
        for c in constraints
    ]
    if args.polar:
        out["polar_dto_area"] = {"n_angles": args.n_angles, "value": r6(
            tradeoff.polar_dto_area(frontier, tradeoff.UNIT_UTOPIA, mode, args.n_angles))}
    emit(out, args.out)
    return 0


def _baseline(args):
    return tradeoff.TradeoffPoint(*args.baseline) if args.baseline else None


def cmd_select(args):
    runs = selection.load_manifest(args.manifest)
    crit = selection.parse_criterion(args.criterion)
    configs = selection.group_by_config(runs, per_seed=args.per_seed)
    baseline = _baseline(args)
    if baseline is None and crit.constrained:
        baseline = selection.baseline_point(configs, args.baseline_method)
    methods = [args.method] if args.method else sorted(
        {c.method for c in configs if c.method != args.baseline_method})
    results = []
    for m in methods:
        cfgs = [c for c in configs if c.method == m]
        if not cfgs:
            raise InputError(f"no runs for method {m!r}")
        results.append(selection.select(cfgs, crit, baseline).as_dict(DIGITS))
    emit({"criterion": crit.label, "per_seed": args.per_seed,
          "utopia": tradeoff.UNIT_UTOPIA.as_dict(),
          "baseline": None if baseline is None else
          {"performance": baseline.performance, "fairness": baseline.fairness},
          "selections": results}, args.out)
    return 0


def cmd_compare(args):
    runs = selection.load_manifest(args.manifest)
    criteria = ([selection.parse_criterion(c) for c in args.criteria]
                if args.criteria else selection.standard_criteria())
    table = selection.compare_methods(runs, criteria, args.mode, _baseline(args),
                                      args.baseline_method, args.per_seed)
    config = {"command": "compare", "mode": args.mode, "per_seed": args.per_seed,
              "criteria": table.criteria, "utopia": tradeoff.UNIT_UTOPIA.as_dict()}
    csv_text = f"# {json.dumps(config)}\n" + table.to_csv(DIGITS)
    write_text(csv_text, args.out_csv)
    if args.out_json:
        emit({"config": config, **table.to_dict(DIGITS)}, args.out_json)
    if args.figure:
        fmt = Path(args.figure).suffix.lstrip(".") or "svg"
        frontiers = {r.method: r.frontier for r in table.rows}
        plotting.write(args.figure, plotting.tradeoff_figure(frontiers, mode=args.mode, fmt=fmt))
    return 0


def cmd_report(args):
    schema, conf, records = load_dataset(args)
    spec = build_spec(args, schema)
    kind = BaseMetricKind(args.metric)
    matrix = metric_matrix(conf, kind, MeanMode(args.mean_mode))
    outcome = agg.aggregate(matrix, spec)
    dataset = records if records is not None else conf
    rep = report.checklist_report(dataset, spec, kind, schema, args.group_motivation,
                                  args.class_motivation, outcome)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "checklist.json").write_text(json.dumps(rep.to_dict(), indent=2) + "\n")
    (out / "checklist.md").write_text(rep.to_markdown())
    (out / "dataset_stats.csv").write_text(rep.dataset_stats.to_csv())
    (out / "metric_table.csv").write_text(disaggregated_table(matrix, schema))
    plotting.write(out / f"metric_heatmap.{args.figure_format}", plotting.metric_heatmap(
        matrix.values, matrix.defined_mask, schema.class_names, schema.group_names,
        title=kind.value.upper(), fmt=args.figure_format))
    emit({"complete": rep.complete, "warnings": rep.warnings, "out_dir": str(out),
          "config": rep.config, "fairness": r6(outcome.fairness)})
    return 0


def cmd_fixture(args):
    if args.divergence_manifest:
        payload = selection.export_manifest(divergence_manifest(args.seed))
        write_text(payload.decode(), args.out)
        return 0
    if args.schema:
        schema = load_schema(args.schema)
    elif args.classes and args.groups:
        schema = DatasetSchema(tuple(c.strip() for c in args.classes.split(",")),
                               tuple(g.strip() for g in args.groups.split(",")))
    else:
        raise InputError("fixture needs --schema or --classes and --groups")
    shape = (schema.n_classes, schema.n_groups)
    n = np.broadcast_to(np.asarray(args.n, dtype=float), shape)
    if (n != np.round(n)).any():
        raise InputError("--n entries must be integers")
    tpr = np.broadcast_to(np.asarray(args.tpr, dtype=float), shape)
    spec = FixtureSpec(schema, tuple(map(tuple, n.astype(int).tolist())),
                       tuple(map(tuple, tpr.tolist())), args.spread, args.seed, Split(args.fixture_split))
    write_text(export_records(generate_fixture(spec), schema).decode(), args.out)
    if args.schema_out:
        Path(args.schema_out).write_text(format_schema(schema))
    return 0


# -- parser ------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """Usage errors become InputError so they share the JSON error line."""

    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = _Parser(prog="fairpfc", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file whose keys replicate any option")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        subs[name] = p
        return p

    def add_utopia(p):
        p.add_argument("--utopia", type=pair, default=(1.0, 1.0), help="utopia point P,F")
        p.add_argument("--weights-dto", type=pair, default=(1.0, 1.0),
                       help="DTO weights for performance,fairness")

    p = add("metrics", cmd_metrics, "per-class per-group metric table")
    add_dataset_args(p)
    add_metric_args(p)
    p.add_argument("--out")
    p.add_argument("--figure", help="write a heatmap (.png/.svg/.pdf)")

    p = add("aggregate", cmd_aggregate, "aggregate a metric matrix into a fairness score")
    add_dataset_args(p)
    add_metric_args(p)
    add_spec_args(p)
    p.add_argument("--out")

    p = add("recommend", cmd_recommend, "suggest unit and exponents from decision answers")
    p.add_argument("--scope", required=True, choices=["per_group", "inter_group"])
    p.add_argument("--scale", choices=["relative", "absolute"])
    p.add_argument("--focus", choices=["extrema", "average"])
    p.add_argument("--emphasis", action="store_true")

    p = add("frontier", cmd_frontier, "Pareto frontier of performance,fairness points")
    p.add_argument("--points", required=True)
    p.add_argument("--mode", default="step", choices=[m.value for m in tradeoff.AucMode])
    p.add_argument("--out")
    p.add_argument("--figure", help="write the trade-off plot (.svg/.png)")

    p = add("dto", cmd_dto, "distance to the utopia point")
    p.add_argument("--performance", type=fraction)
    p.add_argument("--fairness", type=fraction)
    p.add_argument("--points")
    add_utopia(p)
    p.add_argument("--out")

    p = add("auc", cmd_auc, "AUC-PFC and partial AUC-PFC of a point set")
    p.add_argument("--points", required=True)
    p.add_argument("--mode", default="step", choices=[m.value for m in tradeoff.AucMode])
    p.add_argument("--min-performance", type=fraction)
    p.add_argument("--min-fairness", type=fraction)
    p.add_argument("--max-dto", type=fraction)
    p.add_argument("--resolution", type=int, default=256)
    p.add_argument("--polar", action="store_true", help="also integrate DTO in polar coordinates")
    p.add_argument("--n-angles", type=int, default=10_000)
    add_utopia(p)
    p.add_argument("--out")

    for name, func, help_ in (("select", cmd_select, "select a config per method"),
                              ("compare", cmd_compare, "compare methods under many criteria")):
        p = add(name, func, help_)
        p.add_argument("--manifest", required=True)
        p.add_argument("--baseline", type=pair, help="baseline dev point P,F")
        p.add_argument("--baseline-method", default=selection.BASELINE_METHOD)
        p.add_argument("--per-seed", action="store_true")
    subs["select"].add_argument("--criterion", required=True, help="DTO, P, F, P@F+5%%, F@P-10%%")
    subs["select"].add_argument("--method")
    subs["select"].add_argument("--out")
    subs["compare"].add_argument("--criteria", nargs="+")
    subs["compare"].add_argument("--mode", default="step", choices=[m.value for m in tradeoff.AucMode])
    subs["compare"].add_argument("--out-csv")
    subs["compare"].add_argument("--out-json")
    subs["compare"].add_argument("--figure")

    p = add("report", cmd_report, "checklist report with statistics and figures")
    add_dataset_args(p)
    add_metric_args(p)
    add_spec_args(p)
    p.add_argument("--group-motivation", default="")
    p.add_argument("--class-motivation", default="")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--figure-format", default="png", choices=["png", "svg", "pdf"])

    p = add("fixture", cmd_fixture, "generate synthetic records or a sweep manifest")
    p.add_argument("--schema")
    p.add_argument("--classes")
    p.add_argument("--groups")
    p.add_argument("--n", type=matrix_arg, default=1000, help="records per cell, or 'a,b;c,d'")
    p.add_argument("--tpr", type=matrix_arg, default=1.0, help="TPR per cell, or 'a,b;c,d'")
    p.add_argument("--spread", type=fraction, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fixture-split", default="test", choices=[s.value for s in Split])
    p.add_argument("--divergence-manifest", action="store_true",
                   help="write the four-method sweep manifest instead of records")
    p.add_argument("--out")
    p.add_argument("--schema-out")
    # Required options may come from --config, so they are checked after merging.
    for p in subs.values():
        for action in p._actions:
            if action.required and action.option_strings:
                action.required = False
                action.check_required = True
    return parser, subs


def parse_args(argv):
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            config = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(config, dict):
            raise InputError("config file must hold a JSON object")
        sub = subs[args.command]
        known = {a.dest for a in sub._actions}
        defaults = {}
        for key, value in config.items():
            dest = key.replace("-", "_")
            if dest not in known:
                raise InputError(f"config key {key!r} is not an option of {args.command}")
            defaults[dest] = value
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    for action in subs[args.command]._actions:
        if getattr(action, "check_required", False) and getattr(args, action.dest) is None:
            raise InputError(f"fairpfc {args.command}: option {action.option_strings[-1]} "
                             "is required")
    return args


def _fail(exc: BaseException, code: int, kind: str) -> int:
    payload = {"error": kind, "exit_code": code, "message": str(getattr(exc, "message", exc))}
    for attr in ("line", "field"):
        if getattr(exc, attr, None) is not None:
            payload[attr] = getattr(exc, attr)
    sys.stderr.write(json.dumps(payload) + "\n")
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except FairPFCError as exc:
        return _fail(exc, exc.exit_code, type(exc).__name__)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FairPFCError as exc:
        return _fail(exc, exc.exit_code, type(exc).__name__)
    except OSError as exc:
        return _fail(exc, 2, "OSError")
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        return _fail(exc, 4, type(exc).__name__)


if __name__ == "__main__":
    sys.exit(main())
