import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairpfc.errors import InfeasibleSelectionError, InputError, ParseError
from fairpfc.selection import (CandidateRun, CriterionKind, SelectionCriterion, compare_methods,
                               export_manifest, feasible, group_by_config, parse_criterion,
                               parse_manifest, select, standard_criteria)
from fairpfc.tradeoff import TradeoffPoint

P = TradeoffPoint


def run(method, cfg, dev, test=None, seed=0, loss=None):
    return CandidateRun(method, cfg, seed, P(*dev), P(*(test or dev)), dev_loss=loss)


def summaries(method, devs):
    return group_by_config([run(method, f"c{i}", d) for i, d in enumerate(devs)])


def test_group_by_config_single_seed():
    (s,) = group_by_config([run("m", "c", (0.7, 0.6), (0.71, 0.62))])
    assert s.dev == P(0.7, 0.6) and s.test == P(0.71, 0.62)
    assert s.dev_std == (0.0, 0.0) and s.n_seeds == 1


def test_group_by_config_sample_std():
    (s,) = group_by_config([run("m", "c", (0.80, 0.5), seed=0), run("m", "c", (0.82, 0.5), seed=1)])
    assert s.dev.performance == pytest.approx(0.81)
    assert s.dev_std[0] == pytest.approx(0.0141421, abs=5e-8)


def test_group_by_config_empty():
    with pytest.raises(InputError):
        group_by_config([])


def test_single_config_wins_everything():
    cfgs = summaries("m", [(0.7, 0.7)])
    base = P(0.6, 0.6)
    for crit in standard_criteria():
        assert select(cfgs, crit, base).chosen_config == "c0"


def test_fairness_at_perf_loss_example():
    cfgs = summaries("m", [(0.80, 0.60), (0.76, 0.70), (0.78, 0.65)])
    crit = parse_criterion("F@P-5%")
    res = select(cfgs, crit, P(0.82, 0.58))
    assert res.n_feasible == 2
    assert res.dev_point == P(0.78, 0.65)


def test_perf_at_fairness_gain_is_absolute():
    # 0.58 + 0.05 = 0.63, so only configs at or above 0.63 qualify
    cfgs = summaries("m", [(0.80, 0.62), (0.70, 0.63), (0.60, 0.90)])
    res = select(cfgs, parse_criterion("P@F+5%"), P(0.82, 0.58))
    assert res.dev_point == P(0.70, 0.63)


def test_min_dto_reports_test_dto():
    cfgs = group_by_config([run("inlp", "a", (0.80, 0.55), (0.813544, 0.624426)),
                            run("inlp", "b", (0.50, 0.50), (0.5, 0.5))])
    res = select(cfgs, parse_criterion("DTO"))
    assert res.chosen_config == "a"
    assert round(res.test_dto, 6) == 0.419311


def test_infeasible_names_threshold():
    cfgs = summaries("m", [(0.6, 0.6)])
    with pytest.raises(InfeasibleSelectionError, match="0.77"):
        select(cfgs, parse_criterion("F@P-5%"), P(0.82, 0.58))


def test_constrained_needs_baseline():
    with pytest.raises(InputError):
        select(summaries("m", [(0.6, 0.6)]), parse_criterion("F@P-5%"), None)


def test_tie_break_prefers_fairness_then_id():
    cfgs = summaries("m", [(0.8, 0.5), (0.8, 0.6), (0.8, 0.6)])
    assert select(cfgs, parse_criterion("P")).chosen_config == "c1"


def test_min_loss_requires_losses():
    cfgs = group_by_config([run("m", "a", (0.5, 0.5), loss=0.3), run("m", "b", (0.6, 0.6), loss=0.2)])
    assert select(cfgs, SelectionCriterion(CriterionKind.MIN_LOSS)).chosen_config == "b"
    with pytest.raises(InputError, match="dev_loss"):
        select(summaries("m", [(0.5, 0.5)]), SelectionCriterion(CriterionKind.MIN_LOSS))


@pytest.mark.parametrize("text,label", [
    ("dto", "DTO"), ("P@F+5%", "P@F+5%"), ("F@P-0.1", "F@P-10%"), ("f", "F")])
def test_parse_criterion(text, label):
    assert parse_criterion(text).label == label


def test_parse_criterion_rejects():
    with pytest.raises(InputError):
        parse_criterion("Q")
    with pytest.raises(InputError):
        parse_criterion("P@F+150%")


def test_standard_labels():
    assert [c.label for c in standard_criteria()] == \
        ["DTO", "P", "P@F+5%", "P@F+10%", "F", "F@P-5%", "F@P-10%"]


# -- manifest ---------------------------------------------------------------------

def test_manifest_roundtrip():
    runs = [run("a", "c0", (0.5, 0.6), (0.55, 0.65), seed=s) for s in range(3)]
    runs.append(run("b", "c1", (0.1, 0.2), loss=0.4))
    assert parse_manifest(export_manifest(runs)) == runs


def test_manifest_errors_are_positioned():
    good = export_manifest([run("a", "c0", (0.5, 0.6))]).decode()
    with pytest.raises(ParseError) as err:
        parse_manifest(good + "{not json}\n")
    assert err.value.line == 2
    with pytest.raises(ParseError, match="duplicate"):
        parse_manifest(good + good)
    with pytest.raises(ParseError, match="missing"):
        parse_manifest('{"method": "a"}\n')
    with pytest.raises(ParseError, match=r"\[0, 1\]"):
        parse_manifest(good.replace("0.5", "1.5"))


# -- comparison --------------------------------------------------------------------

def test_compare_two_methods_auc():
    runs = [run("one", "x", (0.8, 0.5)),
            run("two", "x", (0.8, 0.5)), run("two", "y", (0.6, 0.9))]
    table = compare_methods(runs, [parse_criterion("DTO")])
    aucs = {r.method: r.auc for r in table.rows}
    assert aucs["one"] == pytest.approx(0.40) and aucs["two"] == pytest.approx(0.64)
    assert table.best["AUC"] == ["two"]


def test_compare_one_by_one():
    table = compare_methods([run("m", "x", (0.8, 0.5))], [parse_criterion("P")])
    assert len(table.rows) == 1 and table.criteria == ["P"]
    assert table.to_csv().splitlines()[1].startswith("m,")


def test_compare_flags_ties():
    runs = [run("a", "x", (0.8, 0.5)), run("b", "x", (0.8, 0.5))]
    table = compare_methods(runs, [parse_criterion("DTO")])
    assert table.best["DTO"] == ["a", "b"] and table.ties["DTO"]


def test_compare_leaves_infeasible_gap():
    runs = [run("vanilla", "v", (0.82, 0.58)), run("a", "x", (0.6, 0.6)), run("b", "x", (0.8, 0.7))]
    table = compare_methods(runs, [parse_criterion("F@P-5%")])
    row = {r.method: r for r in table.rows}
    assert row["a"].results["F@P-5%"] is None and "F@P-5%" in row["a"].infeasible
    assert "NA" in table.to_csv()
    assert "vanilla" not in row


def test_auc_uses_test_points_only():
    runs = [run("m", "x", dev=(0.1, 0.1), test=(0.8, 0.5))]
    table = compare_methods(runs, [parse_criterion("P")])
    assert table.rows[0].auc == pytest.approx(0.4)


sweep = st.lists(st.tuples(st.sampled_from(["a", "b", "c"]), st.integers(0, 5), st.integers(0, 2),
                           st.floats(0.3, 1.0), st.floats(0.3, 1.0)),
                 min_size=1, max_size=40, unique_by=lambda t: t[:3])


def _runs(rows):
    return [CandidateRun(m, f"c{c}", s, P(p, f), P(f, p)) for m, c, s, p, f in rows]


@given(sweep, st.randoms(use_true_random=False))
def test_selection_independent_of_input_order(rows, rnd):
    runs = _runs(rows)
    base = P(0.6, 0.5)
    shuffled = list(runs)
    rnd.shuffle(shuffled)
    crits = standard_criteria()
    t1 = compare_methods(runs, crits, baseline=base).to_dict()
    t2 = compare_methods(shuffled, crits, baseline=base).to_dict()
    assert t1 == t2


@given(sweep)
def test_constraint_soundness(rows):
    runs = _runs(rows)
    base = P(0.6, 0.5)
    configs = group_by_config(runs)
    for method in {c.method for c in configs}:
        cfgs = [c for c in configs if c.method == method]
        for crit in standard_criteria():
            try:
                res = select(cfgs, crit, base)
            except InfeasibleSelectionError:
                assert not feasible(cfgs, crit, base)
                continue
            if crit.kind is CriterionKind.PERF_AT_FAIRNESS_GAIN:
                assert res.dev_point.fairness >= base.fairness + crit.pp - 1e-12
            elif crit.kind is CriterionKind.FAIRNESS_AT_PERF_LOSS:
                assert res.dev_point.performance >= base.performance - crit.pp - 1e-12


def test_random_sweep_smoke():
    rng = random.Random(3)
    runs = [CandidateRun(m, f"c{i}", 0, P(rng.random(), rng.random()), P(rng.random(), rng.random()))
            for m in ("a", "b") for i in range(30)]
    table = compare_methods(runs, baseline=P(0.5, 0.5))
    assert set(table.best) == {*table.criteria, "AUC"}
