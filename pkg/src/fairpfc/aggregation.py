"""Two-step aggregation of a metric matrix into a single fairness score.

Each class row is first reduced across groups to ``beta[c]`` (basic unit
transform followed by a weighted generalized mean), then the class vector is
reduced to ``delta``, which ``normalize`` maps onto a [0, 1] fairness score
where 1 is perfectly fair.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from fairpfc.errors import InputError
from fairpfc.group_metrics import MeanMode, MetricMatrix

log = logging.getLogger(__name__)

INF = math.inf
# Indicator units compare |x| <= gamma with this slack so that values lying
# on the boundary up to rounding (0.9 / 0.75 - 1 vs 0.2) count as inside.
THRESHOLD_TOL = 1e-12


class UnitKind(str, enum.Enum):
    SCORE = "score"
    GAP = "gap"
    RATIO = "ratio"
    GAP_THRESHOLD = "gap_threshold"
    RATIO_THRESHOLD = "ratio_threshold"


@dataclass(frozen=True)
class BasicUnit:
    kind: UnitKind
    gamma: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", UnitKind(self.kind))
        thresholded = self.kind in (UnitKind.GAP_THRESHOLD, UnitKind.RATIO_THRESHOLD)
        if thresholded:
            if self.gamma is None or not math.isfinite(self.gamma) or self.gamma <= 0:
                raise InputError(f"{self.kind.value} needs a finite gamma > 0, got {self.gamma}")
        elif self.gamma is not None:
            raise InputError(f"{self.kind.value} takes no gamma")

    def __str__(self):
        return self.kind.value if self.gamma is None else f"{self.kind.value}(gamma={self.gamma:g})"


SCORE = BasicUnit(UnitKind.SCORE)
GAP = BasicUnit(UnitKind.GAP)
RATIO = BasicUnit(UnitKind.RATIO)


class ClassMethod(str, enum.Enum):
    MEAN = "mean"
    QUADRATIC_MEAN = "quadratic_mean"
    BINARY = "binary"
    GENERALIZED_MEAN = "generalized_mean"


@dataclass(frozen=True)
class ClassAggregation:
    method: ClassMethod = ClassMethod.MEAN
    target: int | None = None
    p: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "method", ClassMethod(self.method))
        if self.method is ClassMethod.BINARY:
            if self.target is None or self.target < 0:
                raise InputError("binary class aggregation needs a valid class index")
        if self.method is ClassMethod.GENERALIZED_MEAN:
            check_exponent(self.p)

    def __str__(self):
        if self.method is ClassMethod.BINARY:
            return f"binary(class={self.target})"
        if self.method is ClassMethod.GENERALIZED_MEAN:
            return f"generalized_mean(p={format_exponent(self.p)})"
        return self.method.value


class Direction(str, enum.Enum):
    SMALLER_FAIRER = "smaller_fairer"
    LARGER_FAIRER = "larger_fairer"
    RATIO_AROUND_ONE = "ratio_around_one"


class GroupForm(str, enum.Enum):
    """How a class row is reduced across groups.

    ``power`` is the weighted generalized mean of the unit values. The other
    forms cover Table-1-style reductions that are not a single power mean:
    the Bessel-corrected variance of gaps, max - min of scores and
    max / min of scores.
    """

    POWER = "power"
    VARIANCE = "variance"
    DIFFERENCE = "difference"
    EXTREMA_RATIO = "extrema_ratio"


@dataclass(frozen=True)
class AggregationSpec:
    unit: BasicUnit
    group_p: float
    class_method: ClassAggregation
    direction: Direction
    mean_mode: MeanMode | None = None
    group_weights: tuple[float, ...] | None = None
    group_form: GroupForm = GroupForm.POWER
    group_sum: bool = False
    name: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        object.__setattr__(self, "group_form", GroupForm(self.group_form))
        if self.mean_mode is not None:
            object.__setattr__(self, "mean_mode", MeanMode(self.mean_mode))
        check_exponent(self.group_p)
        if self.group_weights is not None:
            w = tuple(float(x) for x in self.group_weights)
            check_weights(w)
            if self.group_form is not GroupForm.POWER:
                raise InputError(f"group weights are only supported with the power form, "
                                 f"not {self.group_form.value}")
            object.__setattr__(self, "group_weights", w)

    def as_dict(self) -> dict:
        """Plain description used to echo the configuration in reports."""
        return {
            "preset": self.name,
            "unit": str(self.unit),
            "group_form": self.group_form.value,
            "group_p": format_exponent(self.group_p),
            "group_sum": self.group_sum,
            "group_weights": list(self.group_weights) if self.group_weights else None,
            "class_method": str(self.class_method),
            "mean_mode": self.mean_mode.value if self.mean_mode else None,
            "direction": self.direction.value,
        }


@dataclass(frozen=True, eq=False)
class AggregationOutcome:
    betas: np.ndarray
    delta: float
    fairness: float
    spec: AggregationSpec = field(repr=False)


def format_exponent(p) -> str:
    if p is None:
        return "none"
    if p == INF:
        return "+inf"
    if p == -INF:
        return "-inf"
    return f"{p:g}"


def parse_exponent(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "+inf", "infinity", "+infinity", "max"):
        return INF
    if t in ("-inf", "-infinity", "min"):
        return -INF
    try:
        p = float(t)
    except ValueError:
        raise InputError(f"not an exponent: {text!r}") from None
    check_exponent(p)
    return p


def check_exponent(p) -> None:
    if p is None or math.isnan(p):
        raise InputError(f"exponent must be a real number or +/-inf, got {p}")
    if p == 0:
        raise InputError("exponent p = 0 (geometric mean) is not supported")


def check_weights(weights: Sequence[float], n: int | None = None) -> None:
    w = np.asarray(weights, dtype=float)
    if n is not None and w.shape != (n,):
        raise InputError(f"expected {n} weights, got {w.shape[0] if w.ndim else 'scalar'}")
    if (w < 0).any() or not np.isfinite(w).all():
        raise InputError("weights must be finite and non-negative")
    if abs(w.sum() - 1.0) > 1e-9:
        raise InputError(f"weights must sum to 1, got {w.sum()!r}")


def generalized_mean(values, p: float, weights=None) -> float:
    """Weighted power mean ``(sum_i w_i v_i**p) ** (1/p)``.

    ``p = +inf`` and ``-inf`` give the max and min over entries with positive
    weight. With ``p < 0`` any zero value makes the result 0 (the limit).
    Weights default to uniform and must sum to 1.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise InputError("generalized mean of an empty sequence")
    if not np.isfinite(v).all():
        raise InputError("generalized mean needs finite values")
    if (v < 0).any():
        raise InputError("generalized mean needs non-negative values")
    check_exponent(p)
    if weights is None:
        w = np.full(v.size, 1.0 / v.size)
    else:
        w = np.asarray(weights, dtype=float).ravel()
        check_weights(w, v.size)
        keep = w > 0
        v, w = v[keep], w[keep] / w[keep].sum()
    lo, hi = v.min(), v.max()
    if lo == hi:
        return float(lo)
    if p == INF:
        return float(hi)
    if p == -INF:
        return float(lo)
    if p < 0 and lo == 0:
        return 0.0
    # Scale by the dominant element so every power term is <= 1.
    ref = hi if p > 0 else lo
    m = ref * float(np.dot(w, (v / ref) ** p)) ** (1.0 / p)
    return float(min(max(m, lo), hi))


def unit_transform(row, class_mean: float, unit: BasicUnit, mask=None):
    """Map a class row to basic-unit values; returns ``(values, mask)``."""
    row = np.asarray(row, dtype=float)
    mask = np.ones(row.shape, bool) if mask is None else np.asarray(mask, bool)
    kind = unit.kind
    if kind is UnitKind.SCORE:
        out = row.copy()
    elif kind is UnitKind.GAP:
        out = np.abs(row - class_mean)
    elif kind is UnitKind.GAP_THRESHOLD:
        out = (np.abs(row - class_mean) <= unit.gamma + THRESHOLD_TOL).astype(float)
    else:
        if class_mean <= 0:
            raise InputError(f"{kind.value} unit is undefined when the class mean is {class_mean}")
        ratio = row / class_mean
        if kind is UnitKind.RATIO:
            out = ratio
        else:
            out = (np.abs(ratio - 1.0) <= unit.gamma + THRESHOLD_TOL).astype(float)
    return np.where(mask, out, 0.0), mask


def group_aggregate(row, class_mean: float, spec: AggregationSpec, mask=None) -> float:
    """Reduce one class row across groups to ``beta``."""
    units, mask = unit_transform(row, class_mean, spec.unit, mask)
    if not mask.any():
        raise InputError("every group cell of this class is undefined")
    vals = units[mask]
    form = spec.group_form
    if form is GroupForm.VARIANCE:
        n = vals.size
        if n < 2:
            raise InputError("variance needs at least two defined groups")
        return n / (n - 1) * generalized_mean(vals, 2.0) ** 2
    if form is GroupForm.DIFFERENCE:
        return float(vals.max() - vals.min())
    if form is GroupForm.EXTREMA_RATIO:
        if vals.min() <= 0:
            raise InputError("max/min ratio is undefined when the minimum score is 0")
        return float(vals.max() / vals.min())
    weights = None
    if spec.group_weights is not None:
        w = np.asarray(spec.group_weights)
        if w.shape != mask.shape:
            raise InputError(f"expected {mask.size} group weights, got {w.size}")
        w = w[mask]
        if w.sum() <= 0:
            raise InputError("group weights are zero on every defined cell")
        weights = w / w.sum()
    beta = generalized_mean(vals, spec.group_p, weights)
    return vals.size * beta if spec.group_sum else beta


def class_aggregate(betas, method: ClassAggregation, mask=None) -> float:
    """Reduce the per-class vector to ``delta``."""
    betas = np.asarray(betas, dtype=float)
    mask = np.ones(betas.shape, bool) if mask is None else np.asarray(mask, bool)
    if method.method is ClassMethod.BINARY:
        if not 0 <= method.target < betas.size:
            raise InputError(f"binary target class {method.target} out of range")
        if not mask[method.target]:
            raise InputError(f"binary target class {method.target} is undefined")
        return float(betas[method.target])
    if not mask.any():
        raise InputError("no defined class to aggregate")
    vals = betas[mask]
    if method.method is ClassMethod.MEAN:
        return float(np.mean(vals))
    if method.method is ClassMethod.QUADRATIC_MEAN:
        return float(np.sqrt(np.mean(vals ** 2)))
    return generalized_mean(vals, method.p)


def normalize(delta: float, spec_or_direction) -> float:
    """Map ``delta`` onto [0, 1], 1 meaning perfectly fair."""
    direction = getattr(spec_or_direction, "direction", spec_or_direction)
    direction = Direction(direction)
    if not math.isfinite(delta):
        raise InputError(f"delta must be finite, got {delta}")
    if direction is Direction.SMALLER_FAIRER:
        raw = 1.0 - delta
    elif direction is Direction.LARGER_FAIRER:
        raw = delta
    else:
        if delta <= 0:
            raise InputError(f"ratio-type delta must be positive, got {delta}")
        raw = min(delta, 1.0 / delta)
    clamped = min(max(raw, 0.0), 1.0)
    if clamped != raw:
        log.warning("fairness %.6g clamped to %.6g (direction %s)", raw, clamped, direction.value)
    return clamped


def aggregate(matrix: MetricMatrix, spec: AggregationSpec) -> AggregationOutcome:
    if spec.group_weights is not None and len(spec.group_weights) != matrix.n_groups:
        raise InputError(f"expected {matrix.n_groups} group weights, got {len(spec.group_weights)}")
    means = matrix.means_for(spec.mean_mode)
    betas = np.array([
        group_aggregate(matrix.values[c], means[c], spec, matrix.defined_mask[c])
        for c in range(matrix.n_classes)
    ])
    delta = class_aggregate(betas, spec.class_method)
    return AggregationOutcome(betas, delta, normalize(delta, spec), spec)


# -- presets -----------------------------------------------------------------

GROUP_PRESETS = (
    "mean_gap", "variance", "max_gap", "min_score", "min_ratio", "max_difference",
    "max_ratio", "difference_threshold", "ratio_threshold",
)
CLASS_PRESETS = ("binary", "quadratic_mean", "mean")
PRESET_NAMES = GROUP_PRESETS + CLASS_PRESETS + ("paper_4_1",)

DEFAULT_GAP_GAMMA = 0.05
DEFAULT_RATIO_GAMMA = 0.2


def preset(name: str, *, gamma: float | None = None, positive_class: int = 1,
           mean_mode: MeanMode | None = None) -> AggregationSpec:
    """Named aggregation recipes.

    The nine group-wise names fix the group reduction and use the class
    mean; the three class-wise names fix the class reduction on top of the
    mean gap. ``paper_4_1`` sums TPR gaps over groups, takes the RMS over
    classes and reports ``1 - delta``.
    """
    mean = ClassAggregation(ClassMethod.MEAN)
    S, L, R = Direction.SMALLER_FAIRER, Direction.LARGER_FAIRER, Direction.RATIO_AROUND_ONE
    table = {
        "mean_gap": dict(unit=GAP, group_p=1.0, direction=S),
        "variance": dict(unit=GAP, group_p=2.0, direction=S, group_form=GroupForm.VARIANCE),
        "max_gap": dict(unit=GAP, group_p=INF, direction=S),
        "min_score": dict(unit=SCORE, group_p=-INF, direction=L),
        "min_ratio": dict(unit=RATIO, group_p=-INF, direction=R),
        "max_difference": dict(unit=SCORE, group_p=INF, direction=S,
                               group_form=GroupForm.DIFFERENCE),
        "max_ratio": dict(unit=SCORE, group_p=INF, direction=R,
                          group_form=GroupForm.EXTREMA_RATIO),
        "difference_threshold": dict(
            unit=BasicUnit(UnitKind.GAP_THRESHOLD, gamma or DEFAULT_GAP_GAMMA),
            group_p=1.0, direction=L),
        "ratio_threshold": dict(
            unit=BasicUnit(UnitKind.RATIO_THRESHOLD, gamma or DEFAULT_RATIO_GAMMA),
            group_p=1.0, direction=L),
        "binary": dict(unit=GAP, group_p=1.0, direction=S,
                       class_method=ClassAggregation(ClassMethod.BINARY, positive_class)),
        "quadratic_mean": dict(unit=GAP, group_p=1.0, direction=S,
                               class_method=ClassAggregation(ClassMethod.QUADRATIC_MEAN)),
        "mean": dict(unit=GAP, group_p=1.0, direction=S),
        "paper_4_1": dict(unit=GAP, group_p=1.0, direction=S, group_sum=True,
                          class_method=ClassAggregation(ClassMethod.QUADRATIC_MEAN)),
    }
    try:
        kwargs = table[name]
    except KeyError:
        raise InputError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}") from None
    if gamma is not None and name not in ("difference_threshold", "ratio_threshold"):
        raise InputError(f"preset {name!r} takes no gamma")
    kwargs.setdefault("class_method", mean)
    return AggregationSpec(mean_mode=mean_mode, name=name, **kwargs)


# -- decision path -----------------------------------------------------------

@dataclass(frozen=True)
class DecisionAnswers:
    """Answers to the unit / exponent questions.

    ``scope`` is ``per_group`` or ``inter_group``; ``scale`` is ``relative``
    or ``absolute`` (only read for inter-group); ``focus`` is ``extrema`` or
    ``average``. ``emphasis`` asks the average to lean towards the worse
    groups and, for gaps, the worse classes.
    """

    scope: str
    scale: str | None = None
    focus: str | None = None
    emphasis: bool = False
    positive_class: int | None = None

    def __post_init__(self):
        allowed = {"scope": ("per_group", "inter_group"),
                   "scale": (None, "relative", "absolute"),
                   "focus": (None, "extrema", "average")}
        for key, options in allowed.items():
            if getattr(self, key) not in options:
                raise InputError(f"{key} must be one of {[o for o in options if o]}, "
                                 f"got {getattr(self, key)!r}")
        if self.scope == "inter_group" and self.scale is None:
            raise InputError("inter_group answers need scale = relative or absolute")


def recommend(answers: DecisionAnswers) -> AggregationSpec:
    """Pick unit, exponent and class reduction from the decision answers."""
    average = answers.focus == "average"
    class_method = ClassAggregation(ClassMethod.MEAN)
    if answers.scope == "per_group":
        unit, direction = SCORE, Direction.LARGER_FAIRER
        p = (-1.0 if answers.emphasis else 1.0) if average else -INF
    elif answers.scale == "absolute":
        unit, direction = GAP, Direction.SMALLER_FAIRER
        if average:
            p = 2.0 if answers.emphasis else 1.0
        else:
            p = INF
        if answers.emphasis:
            class_method = ClassAggregation(ClassMethod.QUADRATIC_MEAN)
    else:
        unit, direction = RATIO, Direction.RATIO_AROUND_ONE
        p = (-1.0 if answers.emphasis else 1.0) if average else -INF
    if answers.positive_class is not None:
        class_method = ClassAggregation(ClassMethod.BINARY, answers.positive_class)
    return AggregationSpec(unit=unit, group_p=p, class_method=class_method,
                           direction=direction, name="recommended")


def describe(spec: AggregationSpec) -> tuple[str, str]:
    """Human-readable group-wise and class-wise descriptions for reports."""
    form = spec.group_form
    if form is GroupForm.VARIANCE:
        group = "variance of gaps with 1/(G-1) correction"
    elif form is GroupForm.DIFFERENCE:
        group = "max - min of scores across groups"
    elif form is GroupForm.EXTREMA_RATIO:
        group = "max / min of scores across groups"
    else:
        names = {INF: "maximum", -INF: "minimum", 1.0: "arithmetic mean",
                 2.0: "quadratic mean", -1.0: "harmonic mean"}
        group = names.get(spec.group_p, f"generalized mean (p={format_exponent(spec.group_p)})")
        group = f"{group} of {spec.unit} units"
        if spec.group_weights:
            group = "weighted " + group
        if spec.group_sum:
            group = f"sum over groups (G x {group})"
    cls = {
        ClassMethod.MEAN: "arithmetic mean over classes",
        ClassMethod.QUADRATIC_MEAN: "root mean square over classes",
        ClassMethod.BINARY: f"class {spec.class_method.target} only (binary)",
        ClassMethod.GENERALIZED_MEAN:
            f"generalized mean over classes (p={format_exponent(spec.class_method.p)})",
    }[spec.class_method.method]
    return group, cls


def with_mean_mode(spec: AggregationSpec, mode: MeanMode | None) -> AggregationSpec:
    return replace(spec, mean_mode=MeanMode(mode) if mode is not None else None)
