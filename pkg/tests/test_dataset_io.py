import re

import numpy as np
import pytest
from conftest import confusions, records
from hypothesis import given

from fairpfc.dataset_io import (DatasetSchema, GroupedConfusions, PredictionRecord, Split,
                                export_confusions, export_records, format_schema,
                                parse_confusions, parse_records, parse_schema)
from fairpfc.errors import InputError, ParseError
from fairpfc.group_metrics import confusions_from_records

DIAG = b"""classes: a, b
groups: x, y

[group x]
5 0
0 5

[group y]
5 0
0 5
"""


def test_header_only_records_file_is_empty(schema22):
    assert parse_records(b"instance_id,y,y_hat,z,split\n", schema22) == []


def test_three_rows_resolve_names(schema22):
    text = ("instance_id,y,y_hat,z,split\n"
            "a,neg,neg,g0,test\n"
            "b,pos,neg,g1,dev\n"
            "\n"
            "c,pos,pos,g0,train\n")
    recs = parse_records(text, schema22)
    assert recs == [
        PredictionRecord("a", 0, 0, 0, Split.TEST),
        PredictionRecord("b", 1, 0, 1, Split.DEV),
        PredictionRecord("c", 1, 1, 0, Split.TRAIN),
    ]


def test_column_order_is_free(schema22):
    text = "split,z,y_hat,y,instance_id\ntest,g1,pos,neg,q\n"
    assert parse_records(text, schema22) == [PredictionRecord("q", 0, 1, 1, Split.TEST)]


def test_unknown_group_names_row(schema22):
    text = "instance_id,y,y_hat,z,split\na,neg,neg,g0,test\nb,neg,neg,unknown,test\n"
    with pytest.raises(ParseError) as err:
        parse_records(text, schema22)
    assert err.value.line == 3 and err.value.field == 4
    assert "unknown" in str(err.value)


def test_unknown_split_rejected(schema22):
    with pytest.raises(ParseError, match="split"):
        parse_records("instance_id,y,y_hat,z,split\na,neg,neg,g0,validation\n", schema22)


def test_duplicate_id_within_split(schema22):
    text = "instance_id,y,y_hat,z,split\na,neg,neg,g0,test\na,pos,pos,g1,test\n"
    with pytest.raises(ParseError, match="duplicate") as err:
        parse_records(text, schema22)
    assert err.value.line == 3
    # the same id in another split is a different instance
    ok = "instance_id,y,y_hat,z,split\na,neg,neg,g0,test\na,pos,pos,g1,dev\n"
    assert len(parse_records(ok, schema22)) == 2


def test_ragged_row_reports_line(schema22):
    with pytest.raises(ParseError) as err:
        parse_records("instance_id,y,y_hat,z,split\na,neg,neg,g0\n", schema22)
    assert err.value.line == 2


def test_missing_column(schema22):
    with pytest.raises(ParseError, match="missing column"):
        parse_records("instance_id,y,z,split\n", schema22)


def test_case_sensitive_names(schema22):
    with pytest.raises(ParseError):
        parse_records("instance_id,y,y_hat,z,split\na,NEG,neg,g0,test\n", schema22)


def test_diagonal_confusions_total():
    conf = parse_confusions(DIAG)
    assert conf.total == 20
    assert conf.schema.class_names == ("a", "b")
    np.testing.assert_array_equal(conf.counts[0], [[5, 0], [0, 5]])


def test_shape_mismatch():
    bad = DIAG.replace(b"5 0\n0 5\n\n[group y]", b"5 0 1\n0 5 1\n\n[group y]")
    with pytest.raises(ParseError, match="expected 2") as err:
        parse_confusions(bad)
    assert err.value.line == 5


def test_missing_row():
    bad = DIAG.replace(b"5 0\n0 5\n\n[group y]", b"5 0\n\n[group y]")
    with pytest.raises(ParseError):
        parse_confusions(bad)


def test_negative_count():
    with pytest.raises(ParseError, match="negative") as err:
        parse_confusions(DIAG.replace(b"0 5\n\n[group y]", b"0 -1\n\n[group y]"))
    assert err.value.line == 6 and err.value.field == 2


def test_missing_group_block():
    text = DIAG.split(b"[group y]")[0]
    with pytest.raises(ParseError, match="y"):
        parse_confusions(text)


def test_non_integer_count():
    with pytest.raises(ParseError):
        parse_confusions(DIAG.replace(b"5 0\n0 5\n\n[group y]", b"5 0.5\n0 5\n\n[group y]"))


def test_unknown_group_block():
    with pytest.raises(ParseError, match="z"):
        parse_confusions(DIAG + b"\n[group z]\n1 0\n0 1\n")


def test_export_is_deterministic():
    conf = parse_confusions(DIAG)
    assert export_confusions(conf) == export_confusions(conf)
    assert parse_confusions(export_confusions(conf)) == conf


def test_export_from_six_records(toy_records, schema22):
    conf = confusions_from_records(toy_records, schema22)
    again = parse_confusions(export_confusions(conf))
    assert again.total == 6


def test_schema_roundtrip_with_positive_class(schema22):
    assert parse_schema(format_schema(schema22)) == schema22


@pytest.mark.parametrize("classes,groups", [
    (("a",), ("x", "y")),
    (("a", "b"), ("x",)),
    (("a", "a"), ("x", "y")),
    (("a", ""), ("x", "y")),
    (("a", "b,c"), ("x", "y")),
    (("a", "#b"), ("x", "y")),
])
def test_schema_invariants(classes, groups):
    with pytest.raises(InputError):
        DatasetSchema(classes, groups)


def test_positive_class_must_be_valid():
    with pytest.raises(InputError):
        DatasetSchema(("a", "b"), ("x", "y"), positive_class=2)


@given(confusions())
def test_confusion_roundtrip(conf):
    assert parse_confusions(export_confusions(conf)) == conf


@given(confusions())
def test_exported_payload_has_gc2_counts(conf):
    text = export_confusions(conf).decode()
    body = [ln for ln in text.splitlines()
            if ln.strip() and not ln.startswith("[") and ":" not in ln and not ln.startswith("#")]
    n_numbers = sum(len(re.findall(r"-?\d+", ln)) for ln in body)
    g, c = conf.schema.n_groups, conf.schema.n_classes
    assert n_numbers == g * c * c


@given(records())
def test_records_roundtrip_keeps_every_row(data):
    schema, recs = data
    # ids are unique overall, so no split collision can occur
    parsed = parse_records(export_records(recs, schema), schema)
    assert parsed == recs


def test_confusions_reject_wrong_shape(schema22):
    with pytest.raises(InputError):
        GroupedConfusions(schema22, np.zeros((2, 3, 3), int))
