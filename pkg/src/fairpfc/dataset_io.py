"""Prediction records, per-group confusion matrices, and their file formats.

Two text formats are supported.

Prediction records are UTF-8 CSV with a header naming the columns
``instance_id, y, y_hat, z, split``. Labels are written by name and resolved
against a :class:`DatasetSchema`. Blank lines are skipped.

Confusion matrices (and schemas on their own) use a small line-oriented
format::

    # comment
    classes: nurse, surgeon
    groups: male, female
    positive_class: surgeon

    [group male]
    5 0
    0 5

    [group female]
    4 1
    0 5

The header block holds ``key: value`` lines; ``classes`` and ``groups`` are
comma-separated name lists and ``positive_class`` is optional. Each
``[group NAME]`` block holds C rows of C whitespace-separated base-10
integers, row = true class, column = predicted class, rows in class order.
Every group in the header needs exactly one block. A schema file is the
header without any blocks.
"""

from __future__ import annotations

import csv
import enum
import io
import re
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Sequence, Union

import numpy as np

from fairpfc.errors import InputError, ParseError

Source = Union[bytes, str, IO[bytes], IO[str]]

RECORD_COLUMNS = ("instance_id", "y", "y_hat", "z", "split")


class Split(str, enum.Enum):
    TRAIN = "train"
    DEV = "dev"
    TEST = "test"


@dataclass(frozen=True)
class DatasetSchema:
    """Ordered class and group vocabularies."""

    class_names: tuple[str, ...]
    group_names: tuple[str, ...]
    positive_class: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "group_names", tuple(self.group_names))
        for kind, names in (("class", self.class_names), ("group", self.group_names)):
            if len(names) < 2:
                raise InputError(f"schema needs at least 2 {kind} names, got {len(names)}")
            for name in names:
                if not name or name != name.strip():
                    raise InputError(f"invalid {kind} name {name!r}")
                if "," in name or "#" in name or "\n" in name:
                    raise InputError(f"{kind} name {name!r} contains ',', '#' or a newline")
            if len(set(names)) != len(names):
                raise InputError(f"duplicate {kind} names in {list(names)}")
        if self.positive_class is not None and not 0 <= self.positive_class < len(self.class_names):
            raise InputError(f"positive_class index {self.positive_class} out of range")

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def n_groups(self) -> int:
        return len(self.group_names)

    def class_index(self, name: str) -> int:
        try:
            return self.class_names.index(name)
        except ValueError:
            raise InputError(f"unknown class name {name!r}") from None

    def group_index(self, name: str) -> int:
        try:
            return self.group_names.index(name)
        except ValueError:
            raise InputError(f"unknown group name {name!r}") from None


@dataclass(frozen=True)
class PredictionRecord:
    instance_id: str
    true_class: int
    predicted_class: int
    group: int
    split: Split = Split.TEST


class GroupedConfusions:
    """One C x C count matrix per protected group.

    ``counts[g, c, k]`` is the number of instances of group ``g`` with true
    class ``c`` predicted as ``k``. The array is stored read-only.
    """

    __slots__ = ("schema", "counts")

    def __init__(self, schema: DatasetSchema, counts):
        arr = np.array(counts, dtype=np.int64)
        shape = (schema.n_groups, schema.n_classes, schema.n_classes)
        if arr.shape != shape:
            raise InputError(f"confusion counts have shape {arr.shape}, expected {shape}")
        if (arr < 0).any():
            raise InputError("confusion counts must be non-negative")
        arr.setflags(write=False)
        self.schema = schema
        self.counts = arr

    def __eq__(self, other):
        if not isinstance(other, GroupedConfusions):
            return NotImplemented
        return self.schema == other.schema and np.array_equal(self.counts, other.counts)

    def __repr__(self):
        return f"GroupedConfusions(schema={self.schema!r}, total={self.total})"

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def merged(self) -> np.ndarray:
        """The C x C confusion matrix of all groups pooled together."""
        return self.counts.sum(axis=0)


def _read_text(source: Source) -> str:
    if isinstance(source, bytes):
        data = source
    elif isinstance(source, str):
        return source
    else:
        data = source.read()
        if isinstance(data, str):
            return data
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not valid UTF-8: {exc}") from None


# -- schema header -----------------------------------------------------------

_HEADER_KEYS = ("classes", "groups", "positive_class")
_BLOCK_RE = re.compile(r"^\[group (.+)\]$")


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _parse_header(lines: Sequence[tuple[int, str]]) -> DatasetSchema:
    values: dict[str, tuple[int, str]] = {}
    for lineno, text in lines:
        key, sep, value = text.partition(":")
        key = key.strip()
        if not sep:
            raise ParseError(f"expected 'key: value', got {text!r}", line=lineno)
        if key not in _HEADER_KEYS:
            raise ParseError(f"unknown header key {key!r}", line=lineno)
        if key in values:
            raise ParseError(f"duplicate header key {key!r}", line=lineno)
        values[key] = (lineno, value.strip())
    for key in ("classes", "groups"):
        if key not in values:
            raise ParseError(f"missing header key {key!r}", line=lines[-1][0] if lines else 1)

    def names(key):
        lineno, value = values[key]
        items = [item.strip() for item in value.split(",")]
        if any(not item for item in items):
            raise ParseError(f"empty name in {key!r}", line=lineno)
        return lineno, items

    c_line, class_names = names("classes")
    g_line, group_names = names("groups")
    positive = None
    if "positive_class" in values:
        p_line, p_name = values["positive_class"]
        if p_name not in class_names:
            raise ParseError(f"positive_class {p_name!r} is not a class", line=p_line)
        positive = class_names.index(p_name)
    try:
        return DatasetSchema(tuple(class_names), tuple(group_names), positive)
    except InputError as exc:
        raise ParseError(exc.message, line=min(c_line, g_line)) from None


def _split_sections(text: str):
    """Split into header lines and ``(name, header_line, rows)`` blocks."""
    header: list[tuple[int, str]] = []
    blocks: list[tuple[str, int, list[tuple[int, str]]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        match = _BLOCK_RE.match(line)
        if match:
            blocks.append((match.group(1).strip(), lineno, []))
        elif line.startswith("["):
            raise ParseError(f"malformed block header {line!r}", line=lineno)
        elif blocks:
            blocks[-1][2].append((lineno, line))
        else:
            header.append((lineno, line))
    return header, blocks


def parse_schema(source: Source) -> DatasetSchema:
    """Parse a schema file (a confusion file header without count blocks)."""
    header, blocks = _split_sections(_read_text(source))
    if blocks:
        raise ParseError("schema file must not contain group blocks", line=blocks[0][1])
    return _parse_header(header)


def format_schema(schema: DatasetSchema) -> str:
    lines = [
        f"classes: {', '.join(schema.class_names)}",
        f"groups: {', '.join(schema.group_names)}",
    ]
    if schema.positive_class is not None:
        lines.append(f"positive_class: {schema.class_names[schema.positive_class]}")
    return "\n".join(lines) + "\n"


# -- confusion matrices ------------------------------------------------------

def parse_confusions(source: Source) -> GroupedConfusions:
    """Parse the confusion-matrix format documented at module level."""
    header, blocks = _split_sections(_read_text(source))
    schema = _parse_header(header)
    n_cls = schema.n_classes
    counts = np.zeros((schema.n_groups, n_cls, n_cls), dtype=np.int64)
    seen: dict[str, int] = {}
    for name, block_line, rows in blocks:
        if name not in schema.group_names:
            raise ParseError(f"block for unknown group {name!r}", line=block_line)
        if name in seen:
            raise ParseError(f"duplicate block for group {name!r} (first at line {seen[name]})",
                             line=block_line)
        seen[name] = block_line
        if len(rows) != n_cls:
            raise ParseError(f"group {name!r} has {len(rows)} rows, expected {n_cls}",
                             line=block_line)
        g = schema.group_index(name)
        for c, (lineno, text) in enumerate(rows):
            fields = text.split()
            if len(fields) != n_cls:
                raise ParseError(f"shape mismatch: row has {len(fields)} counts, expected {n_cls}",
                                 line=lineno)
            for k, tok in enumerate(fields):
                if not re.fullmatch(r"[+-]?\d+", tok):
                    raise ParseError(f"not a base-10 integer: {tok!r}", line=lineno, field=k + 1)
                value = int(tok)
                if value < 0:
                    raise ParseError(f"negative count {value}", line=lineno, field=k + 1)
                counts[g, c, k] = value
    missing = [g for g in schema.group_names if g not in seen]
    if missing:
        last = blocks[-1][2][-1][0] if blocks and blocks[-1][2] else (header[-1][0] if header else 1)
        raise ParseError(f"missing block for group(s) {missing}", line=last)
    return GroupedConfusions(schema, counts)


def export_confusions(confusions: GroupedConfusions) -> bytes:
    """Serialize to the confusion format; ``parse_confusions`` inverts it."""
    out = [format_schema(confusions.schema)]
    for g, name in enumerate(confusions.schema.group_names):
        out.append(f"\n[group {name}]\n")
        for row in confusions.counts[g]:
            out.append(" ".join(str(int(v)) for v in row) + "\n")
    return "".join(out).encode("utf-8")


def load_confusions(path: str | Path) -> GroupedConfusions:
    return parse_confusions(Path(path).read_bytes())


def load_schema(path: str | Path) -> DatasetSchema:
    return parse_schema(Path(path).read_bytes())


# -- prediction records ------------------------------------------------------

def parse_records(source: Source, schema: DatasetSchema) -> list[PredictionRecord]:
    """Parse a prediction-record CSV, resolving label names via ``schema``."""
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text, newline=""))
    header = None
    header_line = 0
    records: list[PredictionRecord] = []
    seen_ids: dict[tuple[Split, str], int] = {}
    for row in reader:
        lineno = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if header is None:
            header = [cell.strip() for cell in row]
            header_line = lineno
            missing = [col for col in RECORD_COLUMNS if col not in header]
            if missing:
                raise ParseError(f"header is missing column(s) {missing}", line=lineno)
            if len(set(header)) != len(header):
                raise ParseError("duplicate column names in header", line=lineno)
            pos = {col: header.index(col) for col in RECORD_COLUMNS}
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=lineno)
        cells = {col: row[pos[col]].strip() for col in RECORD_COLUMNS}

        def resolve(col, lookup, kind):
            try:
                return lookup(cells[col])
            except InputError:
                raise ParseError(f"unknown {kind} name {cells[col]!r}",
                                 line=lineno, field=pos[col] + 1) from None

        y = resolve("y", schema.class_index, "class")
        y_hat = resolve("y_hat", schema.class_index, "class")
        z = resolve("z", schema.group_index, "group")
        try:
            split = Split(cells["split"])
        except ValueError:
            raise ParseError(f"unknown split {cells['split']!r}; expected train, dev or test",
                             line=lineno, field=pos["split"] + 1) from None
        iid = cells["instance_id"]
        if not iid:
            raise ParseError("empty instance_id", line=lineno, field=pos["instance_id"] + 1)
        key = (split, iid)
        if key in seen_ids:
            raise ParseError(f"duplicate instance_id {iid!r} in split {split.value} "
                             f"(first at line {seen_ids[key]})",
                             line=lineno, field=pos["instance_id"] + 1)
        seen_ids[key] = lineno
        records.append(PredictionRecord(iid, y, y_hat, z, split))
    if header is None:
        raise ParseError("missing header row", line=max(header_line, 1))
    return records


def export_records(records: Iterable[PredictionRecord], schema: DatasetSchema) -> bytes:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RECORD_COLUMNS)
    for rec in records:
        writer.writerow([
            rec.instance_id,
            schema.class_names[rec.true_class],
            schema.class_names[rec.predicted_class],
            schema.group_names[rec.group],
            rec.split.value,
        ])
    return buf.getvalue().encode("utf-8")


def load_records(path: str | Path, schema: DatasetSchema) -> list[PredictionRecord]:
    return parse_records(Path(path).read_bytes(), schema)
