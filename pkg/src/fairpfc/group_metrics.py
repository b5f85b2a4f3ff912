"""Per-group one-vs-all metrics and the class x group metric matrix."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from fairpfc.dataset_io import DatasetSchema, GroupedConfusions, PredictionRecord
from fairpfc.errors import InputError, UndefinedMetricError

MISSING = "NA"


class BaseMetricKind(str, enum.Enum):
    TPR = "tpr"
    TNR = "tnr"
    FPR = "fpr"
    PPR = "ppr"
    PRECISION = "precision"
    ACCURACY = "accuracy"
    F1 = "f1"


class MeanMode(str, enum.Enum):
    POOLED = "pooled"
    UNWEIGHTED_GROUP_MEAN = "unweighted_group_mean"


def one_vs_all(confusion: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-class (TP, FP, FN, TN) of a C x C confusion matrix (or a stack of them)."""
    confusion = np.asarray(confusion, dtype=np.int64)
    tp = np.diagonal(confusion, axis1=-2, axis2=-1)
    row = confusion.sum(axis=-1)
    col = confusion.sum(axis=-2)
    total = confusion.sum(axis=(-2, -1))[..., None]
    fn = row - tp
    fp = col - tp
    tn = total - tp - fn - fp
    return tp, fp, fn, tn


def _ratio(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    defined = den > 0
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=defined)
    return out, defined


def metric_from_counts(kind: BaseMetricKind, tp, fp, fn, tn) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate ``kind`` on one-vs-all tuples; returns ``(values, defined)``."""
    kind = BaseMetricKind(kind)
    if kind is BaseMetricKind.TPR:
        return _ratio(tp, tp + fn)
    if kind is BaseMetricKind.TNR:
        return _ratio(tn, tn + fp)
    if kind is BaseMetricKind.FPR:
        return _ratio(fp, fp + tn)
    if kind is BaseMetricKind.PPR:
        return _ratio(tp + fp, tp + fp + fn + tn)
    if kind is BaseMetricKind.PRECISION:
        return _ratio(tp, tp + fp)
    if kind is BaseMetricKind.ACCURACY:
        return _ratio(tp + tn, tp + fp + fn + tn)
    return _ratio(2 * tp, 2 * tp + fp + fn)


@dataclass(frozen=True, eq=False)
class MetricMatrix:
    """C x G matrix of a base metric with a per-class reference mean.

    ``pooled_means`` is kept when the matrix was built from counts so the
    reference can be switched between mean modes after the fact.
    """

    kind: BaseMetricKind
    values: np.ndarray
    defined_mask: np.ndarray
    class_means: np.ndarray
    mean_mode: MeanMode
    pooled_means: np.ndarray | None = None

    @property
    def n_classes(self) -> int:
        return self.values.shape[0]

    @property
    def n_groups(self) -> int:
        return self.values.shape[1]

    def means_for(self, mode: MeanMode | None) -> np.ndarray:
        if mode is None or MeanMode(mode) is self.mean_mode:
            return self.class_means
        if MeanMode(mode) is MeanMode.UNWEIGHTED_GROUP_MEAN:
            return unweighted_group_means(self.values, self.defined_mask)
        if self.pooled_means is None:
            raise InputError("pooled class means need confusion counts; this matrix has none")
        return self.pooled_means

    @classmethod
    def from_values(cls, values, kind=BaseMetricKind.TPR, defined_mask=None) -> "MetricMatrix":
        """Build a matrix from raw cell values with unweighted group means."""
        values = np.array(values, dtype=float)
        if values.ndim != 2:
            raise InputError(f"metric values must be 2-D, got shape {values.shape}")
        mask = np.ones(values.shape, bool) if defined_mask is None else np.array(defined_mask, bool)
        if mask.shape != values.shape:
            raise InputError("defined_mask shape does not match values")
        if ((values < 0) | (values > 1))[mask].any():
            raise InputError("metric values must lie in [0, 1]")
        values = np.where(mask, values, 0.0)
        _check_rows_defined(mask)
        return cls(BaseMetricKind(kind), values, mask,
                   unweighted_group_means(values, mask), MeanMode.UNWEIGHTED_GROUP_MEAN)


def unweighted_group_means(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    n = mask.sum(axis=1)
    sums = np.where(mask, values, 0.0).sum(axis=1)
    out = np.zeros(values.shape[0])
    np.divide(sums, n, out=out, where=n > 0)
    # A constant row should have its value as the mean, not sum/n one ulp off.
    lo = np.where(mask, values, np.inf).min(axis=1)
    hi = np.where(mask, values, -np.inf).max(axis=1)
    flat = (n > 0) & (lo == hi)
    out[flat] = lo[flat]
    return out


def _check_rows_defined(mask: np.ndarray, class_names=None):
    empty = np.flatnonzero(~mask.any(axis=1))
    if empty.size:
        names = [class_names[i] for i in empty] if class_names else empty.tolist()
        raise UndefinedMetricError(f"metric undefined in every group for class(es) {names}")


def confusions_from_records(records: Iterable[PredictionRecord],
                            schema: DatasetSchema) -> GroupedConfusions:
    counts = np.zeros((schema.n_groups, schema.n_classes, schema.n_classes), dtype=np.int64)
    recs = list(records)
    if recs:
        idx = np.array([(r.group, r.true_class, r.predicted_class) for r in recs])
        np.add.at(counts, (idx[:, 0], idx[:, 1], idx[:, 2]), 1)
    return GroupedConfusions(schema, counts)


def metric_matrix(confusions: GroupedConfusions, kind: BaseMetricKind = BaseMetricKind.TPR,
                  mean_mode: MeanMode = MeanMode.POOLED) -> MetricMatrix:
    """Compute M[c, g] one-vs-all for every class and group.

    Cells with an empty denominator are masked. The pooled class mean is the
    metric on the confusion matrix merged over groups.
    """
    kind = BaseMetricKind(kind)
    mean_mode = MeanMode(mean_mode)
    tp, fp, fn, tn = one_vs_all(confusions.counts)          # each (G, C)
    values, defined = metric_from_counts(kind, tp, fp, fn, tn)
    values, defined = values.T.copy(), defined.T.copy()      # (C, G)
    _check_rows_defined(defined, confusions.schema.class_names)
    pooled, _ = metric_from_counts(kind, *one_vs_all(confusions.merged()))
    means = pooled if mean_mode is MeanMode.POOLED else unweighted_group_means(values, defined)
    return MetricMatrix(kind, values, defined, means, mean_mode, pooled)


def overall_accuracy(confusions: GroupedConfusions) -> float:
    total = confusions.total
    if total == 0:
        raise InputError("overall accuracy of an empty dataset is undefined")
    correct = int(np.trace(confusions.counts, axis1=1, axis2=2).sum())
    return correct / total


def disaggregated_table(matrix: MetricMatrix, schema: DatasetSchema, digits: int = 6) -> str:
    """Per-class, per-group CSV with columns class, group, value, defined, class_mean."""
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["class", "group", "value", "defined", "class_mean"])
    for c, cname in enumerate(schema.class_names):
        mean = f"{matrix.class_means[c]:.{digits}f}"
        for g, gname in enumerate(schema.group_names):
            ok = bool(matrix.defined_mask[c, g])
            value = f"{matrix.values[c, g]:.{digits}f}" if ok else MISSING
            writer.writerow([cname, gname, value, str(ok).lower(), mean])
    return buf.getvalue()
