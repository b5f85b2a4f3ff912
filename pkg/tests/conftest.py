import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from fairpfc.dataset_io import DatasetSchema, GroupedConfusions, PredictionRecord, Split

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def schema22():
    return DatasetSchema(("neg", "pos"), ("g0", "g1"), positive_class=1)


@pytest.fixture
def toy_records():
    """Six records: group 0 holds class 0 only, group 1 holds class 1 only."""
    rows = [(0, 0, 0), (0, 0, 0), (0, 1, 0), (1, 1, 1), (1, 1, 1), (1, 0, 1)]
    return [PredictionRecord(f"i{k}", y, yh, g, Split.TEST) for k, (y, yh, g) in enumerate(rows)]


@st.composite
def schemas(draw, max_classes=4, max_groups=4):
    c = draw(st.integers(2, max_classes))
    g = draw(st.integers(2, max_groups))
    return DatasetSchema(tuple(f"c{i}" for i in range(c)), tuple(f"g{i}" for i in range(g)))


@st.composite
def confusions(draw, max_classes=4, max_groups=4, max_count=50):
    schema = draw(schemas(max_classes, max_groups))
    shape = (schema.n_groups, schema.n_classes, schema.n_classes)
    flat = draw(st.lists(st.integers(0, max_count), min_size=int(np.prod(shape)),
                         max_size=int(np.prod(shape))))
    return GroupedConfusions(schema, np.array(flat, dtype=np.int64).reshape(shape))


@st.composite
def records(draw, max_n=200):
    schema = draw(schemas())
    n = draw(st.integers(0, max_n))
    rows = draw(st.lists(st.tuples(st.integers(0, schema.n_classes - 1),
                                   st.integers(0, schema.n_classes - 1),
                                   st.integers(0, schema.n_groups - 1),
                                   st.sampled_from(list(Split))),
                         min_size=n, max_size=n))
    recs = [PredictionRecord(f"id{k}", y, yh, g, s) for k, (y, yh, g, s) in enumerate(rows)]
    return schema, recs


# -- acceptance reporting ----------------------------------------------------------

_ACCEPTANCE = pytest.StashKey[dict]()


class _Criterion:
    def __init__(self, lines, number, title):
        self.lines, self.number, self.title = lines, number, title
        self.details = []

    def note(self, text):
        self.details.append(text)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            status = "PASS"
        elif issubclass(exc_type, pytest.skip.Exception):
            status = "DECLARED"
            self.details.append(str(exc))
        else:
            status = "FAIL"
            self.details.append(f"{exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}")
        detail = "; ".join(self.details)
        self.lines[self.number] = f"criterion {self.number:>2} {status:<8} {self.title}" + (
            f" ({detail})" if detail else "")
        return False


@pytest.fixture
def criterion(request):
    lines = request.config.stash.setdefault(_ACCEPTANCE, {})
    return lambda number, title: _Criterion(lines, number, title)


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
