"""Performance-fairness trade-off geometry.

Both axes are "larger is better" and live in [0, 1]. The attainment region
of a frontier is the set of points dominated by at least one frontier point;
its area is the AUC-PFC. In ``step`` mode the region is a union of
origin-anchored rectangles, in ``linear`` mode adjacent frontier points are
joined by straight segments instead of a staircase.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from fairpfc.errors import InputError

_EPS = 1e-12


@dataclass(frozen=True, order=True)
class TradeoffPoint:
    performance: float
    fairness: float

    def __post_init__(self):
        for name in ("performance", "fairness"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and 0.0 <= v <= 1.0):
                raise InputError(f"{name} must lie in [0, 1], got {v!r}")
            object.__setattr__(self, name, float(v))

    def dominates(self, other: "TradeoffPoint") -> bool:
        return (self.performance >= other.performance and self.fairness >= other.fairness
                and (self.performance > other.performance or self.fairness > other.fairness))


@dataclass(frozen=True)
class UtopiaPoint:
    performance: float = 1.0
    fairness: float = 1.0
    weights: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if len(w) != 2 or not all(math.isfinite(x) and x > 0 for x in w):
            raise InputError(f"utopia weights must be two positive reals, got {self.weights}")
        object.__setattr__(self, "weights", w)
        for name in ("performance", "fairness"):
            if not math.isfinite(getattr(self, name)):
                raise InputError(f"utopia {name} must be finite")

    def dominates(self, point: TradeoffPoint) -> bool:
        return (self.performance >= point.performance - _EPS
                and self.fairness >= point.fairness - _EPS)

    def as_dict(self) -> dict:
        return {"performance": self.performance, "fairness": self.fairness,
                "weights": list(self.weights)}


UNIT_UTOPIA = UtopiaPoint()


class AucMode(str, enum.Enum):
    STEP = "step"
    LINEAR = "linear"


class UtopiaMode(str, enum.Enum):
    FIXED_11 = "fixed11"
    BEST_OBSERVED = "best_observed"


@dataclass(frozen=True)
class Frontier:
    """Non-dominated points, performance strictly decreasing."""

    points: tuple[TradeoffPoint, ...]

    def __post_init__(self):
        pts = tuple(self.points)
        if not pts:
            raise InputError("a frontier needs at least one point")
        for a, b in zip(pts, pts[1:]):
            if not (a.performance > b.performance and a.fairness < b.fairness):
                raise InputError(f"frontier points out of order or dominated: {a} then {b}")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        perf = np.array([p.performance for p in self.points])
        fair = np.array([p.fairness for p in self.points])
        return perf, fair


def _as_points(points: Iterable) -> list[TradeoffPoint]:
    out = []
    for p in points:
        out.append(p if isinstance(p, TradeoffPoint) else TradeoffPoint(*p))
    return out


def pareto_frontier(points: Iterable) -> Frontier:
    """Non-dominated subset, deduplicated and sorted by decreasing performance."""
    pts = _as_points(points)
    if not pts:
        raise InputError("cannot build a frontier from no points")
    ordered = sorted(set(pts), key=lambda q: (-q.performance, -q.fairness))
    kept: list[TradeoffPoint] = []
    best_fairness = -math.inf
    for q in ordered:
        if q.fairness > best_fairness:
            kept.append(q)
            best_fairness = q.fairness
    return Frontier(tuple(kept))


def dto(point: TradeoffPoint, utopia: UtopiaPoint = UNIT_UTOPIA) -> float:
    """Weighted Euclidean distance from ``point`` to the utopia point."""
    if not utopia.dominates(point):
        raise InputError(f"utopia {utopia.performance, utopia.fairness} does not dominate {point}")
    wp, wf = utopia.weights
    dp = utopia.performance - point.performance
    df = utopia.fairness - point.fairness
    return math.sqrt(wp * dp * dp + wf * df * df)


def utopia_from_candidates(points: Iterable, mode: UtopiaMode = UtopiaMode.FIXED_11,
                           weights: tuple[float, float] = (1.0, 1.0)) -> UtopiaPoint:
    pts = _as_points(points)
    if not pts:
        raise InputError("cannot place a utopia point without candidates")
    if UtopiaMode(mode) is UtopiaMode.FIXED_11:
        return UtopiaPoint(1.0, 1.0, weights)
    return UtopiaPoint(max(p.performance for p in pts), max(p.fairness for p in pts), weights)


# -- areas -------------------------------------------------------------------

def boundary(frontier: Frontier, mode: AucMode = AucMode.STEP) -> np.ndarray:
    """Upper-right boundary of the attainment region as an (n, 2) polyline.

    Runs from the fairness axis ``(0, f_max)`` to the performance axis
    ``(p_max, 0)``; x is non-decreasing along it.
    """
    mode = AucMode(mode)
    perf, fair = frontier.arrays()
    perf, fair = perf[::-1], fair[::-1]       # increasing performance
    verts = [(0.0, fair[0]), (perf[0], fair[0])]
    for i in range(1, len(perf)):
        if mode is AucMode.STEP:
            verts.append((perf[i - 1], fair[i]))
        verts.append((perf[i], fair[i]))
    verts.append((perf[-1], 0.0))
    return np.array(verts, dtype=float)


def _integrate_polyline(verts: np.ndarray, lo: float, hi: float) -> float:
    """Integral of the boundary height over x in [lo, hi]."""
    total = 0.0
    for (x0, y0), (x1, y1) in zip(verts[:-1], verts[1:]):
        if x1 <= x0:
            continue
        a, b = max(x0, lo), min(x1, hi)
        if b <= a:
            continue
        slope = (y1 - y0) / (x1 - x0)
        ya, yb = y0 + slope * (a - x0), y0 + slope * (b - x0)
        total += 0.5 * (ya + yb) * (b - a)
    return total


def auc_pfc(frontier: Frontier, mode: AucMode = AucMode.STEP) -> float:
    """Area of the attainment region within the unit square."""
    return _integrate_polyline(boundary(frontier, mode), 0.0, 1.0)


def _swap(frontier: Frontier) -> Frontier:
    return Frontier(tuple(TradeoffPoint(p.fairness, p.performance) for p in reversed(frontier.points)))


def _ray_exit(verts: np.ndarray, cos_t: np.ndarray, sin_t: np.ndarray) -> np.ndarray:
    """Distance from (1, 1) along (-cos, -sin) to the region boundary or square edge."""
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.minimum(np.where(cos_t > 0, 1.0 / cos_t, np.inf),
                       np.where(sin_t > 0, 1.0 / sin_t, np.inf))
        dx, dy = -cos_t, -sin_t
        for (x0, y0), (x1, y1) in zip(verts[:-1], verts[1:]):
            ex, ey = x1 - x0, y1 - y0
            # Solve (1,1) + t (dx, dy) = (x0, y0) + s (ex, ey).
            den = dx * ey - dy * ex
            wx, wy = x0 - 1.0, y0 - 1.0
            t = (wx * ey - wy * ex) / den
            s = (wx * dy - wy * dx) / den
            hit = (den != 0) & (s >= -_EPS) & (s <= 1 + _EPS) & (t >= 0)
            r = np.where(hit, np.minimum(r, t), r)
    return r


def polar_dto_area(frontier: Frontier, utopia: UtopiaPoint = UNIT_UTOPIA,
                   mode: AucMode = AucMode.STEP, n_angles: int = 10_000) -> float:
    """Area swept by the DTO radius from the utopia pole, ``0.5 * int r(theta)^2``.

    Midpoint rule over ``n_angles`` angles in [0, pi/2]. Equals
    ``1 - auc_pfc(frontier, mode)`` in the limit.
    """
    if (utopia.performance, utopia.fairness, utopia.weights) != (1.0, 1.0, (1.0, 1.0)):
        raise InputError("polar integration is only defined for the (1, 1) utopia with unit weights")
    if n_angles < 16:
        raise InputError(f"n_angles must be >= 16, got {n_angles}")
    h = (math.pi / 2) / n_angles
    theta = (np.arange(n_angles) + 0.5) * h
    r = _ray_exit(boundary(frontier, mode), np.cos(theta), np.sin(theta))
    return float(0.5 * np.sum(r * r) * h)


# -- partial AUC -------------------------------------------------------------

class ConstraintKind(str, enum.Enum):
    MIN_PERFORMANCE = "min_performance"
    MIN_FAIRNESS = "min_fairness"
    MAX_DTO = "max_dto"


@dataclass(frozen=True)
class Constraint:
    kind: ConstraintKind
    threshold: float
    utopia: UtopiaPoint = UNIT_UTOPIA

    def __post_init__(self):
        object.__setattr__(self, "kind", ConstraintKind(self.kind))
        if not math.isfinite(self.threshold):
            raise InputError("constraint threshold must be finite")
        if self.kind is ConstraintKind.MAX_DTO and self.threshold < 0:
            raise InputError("max DTO must be non-negative")

    def as_dict(self) -> dict:
        out = {"kind": self.kind.value, "threshold": self.threshold}
        if self.kind is ConstraintKind.MAX_DTO:
            out["utopia"] = self.utopia.as_dict()
        return out


def min_performance(a: float) -> Constraint:
    return Constraint(ConstraintKind.MIN_PERFORMANCE, a)


def min_fairness(f: float) -> Constraint:
    return Constraint(ConstraintKind.MIN_FAIRNESS, f)


def max_dto(d: float, utopia: UtopiaPoint = UNIT_UTOPIA) -> Constraint:
    return Constraint(ConstraintKind.MAX_DTO, d, utopia)


def partial_auc_pfc(frontier: Frontier, constraint: Constraint,
                    mode: AucMode = AucMode.STEP, resolution: int = 256) -> float:
    """Attainment area restricted to the region allowed by ``constraint``.

    Performance and fairness floors are integrated exactly. The DTO ball is
    integrated over performance with Gauss-Legendre (``resolution`` nodes)
    on each piece between boundary vertices and ellipse extremes.
    """
    kind = constraint.kind
    if kind is ConstraintKind.MIN_PERFORMANCE:
        lo = max(constraint.threshold, 0.0)
        return _integrate_polyline(boundary(frontier, mode), lo, 1.0) if lo < 1 else 0.0
    if kind is ConstraintKind.MIN_FAIRNESS:
        lo = max(constraint.threshold, 0.0)
        return _integrate_polyline(boundary(_swap(frontier), mode), lo, 1.0) if lo < 1 else 0.0
    if resolution < 2:
        raise InputError("resolution must be >= 2")
    return _ball_area(boundary(frontier, mode), constraint.threshold, constraint.utopia, resolution)


def _height(verts: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Boundary height at each x; zero beyond the last vertex."""
    out = np.zeros_like(x)
    for (x0, y0), (x1, y1) in zip(verts[:-1], verts[1:]):
        if x1 <= x0:
            continue
        inside = (x >= x0) & (x <= x1)
        out = np.where(inside, y0 + (y1 - y0) * (x - x0) / (x1 - x0), out)
    return out


def _ball_area(verts: np.ndarray, d: float, utopia: UtopiaPoint, nodes: int) -> float:
    wp, wf = utopia.weights
    up, uf = utopia.performance, utopia.fairness
    half_w = d / math.sqrt(wp)
    x_lo, x_hi = max(0.0, up - half_w), min(1.0, up + half_w, verts[-1, 0])
    if d <= 0 or x_hi <= x_lo:
        return 0.0
    breaks = {x_lo, x_hi}
    breaks.update(float(x) for x in verts[:, 0] if x_lo < x < x_hi)
    # Where the ellipse crosses a boundary segment the integrand kinks.
    for (x0, y0), (x1, y1) in zip(verts[:-1], verts[1:]):
        if x1 <= x0:
            continue
        slope = float(y1 - y0) / float(x1 - x0)
        if abs(slope) > 1e150:        # near-vertical segment; its end points are already breaks
            continue
        # wp (up - x)^2 + wf (uf - y0 - slope (x - x0))^2 = d^2, quadratic in x.
        c0 = uf - y0 + slope * x0
        qa = wp + wf * slope * slope
        qb = -2 * wp * up - 2 * wf * c0 * slope
        qc = wp * up * up + wf * c0 * c0 - d * d
        disc = qb * qb - 4 * qa * qc
        if disc >= 0:
            for root in ((-qb - math.sqrt(disc)) / (2 * qa), (-qb + math.sqrt(disc)) / (2 * qa)):
                if max(x0, x_lo) < root < min(x1, x_hi):
                    breaks.add(root)
    cross0 = d * d - wf * uf * uf
    if cross0 > 0:
        for root in (up - math.sqrt(cross0 / wp), up + math.sqrt(cross0 / wp)):
            if x_lo < root < x_hi:
                breaks.add(root)
    edges = np.array(sorted(breaks))
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        x = 0.5 * (b - a) * gx + 0.5 * (a + b)
        span = np.sqrt(np.maximum(d * d - wp * (up - x) ** 2, 0.0) / wf)
        top = np.minimum(_height(verts, x), np.minimum(uf + span, 1.0))
        bottom = np.maximum(uf - span, 0.0)
        total += 0.5 * (b - a) * float(np.dot(gw, np.maximum(top - bottom, 0.0)))
    return total


# -- utopia shift ------------------------------------------------------------

def utopia_shift_check(q: TradeoffPoint, utopia: UtopiaPoint, b: float) -> tuple[float, float]:
    """DTO of ``q`` before and after moving the utopia by ``+b`` in performance.

    The squared distances differ by ``b**2 + 2 b (utopia.performance - q.performance)``,
    so of two points at the same distance the lower-performing one ends up
    farther from the shifted utopia.
    """
    if b <= 0 or not math.isfinite(b):
        raise InputError(f"shift b must be a positive real, got {b}")
    if utopia.weights != (1.0, 1.0):
        raise InputError("utopia shift check assumes unit weights")
    if not utopia.dominates(q):
        raise InputError("utopia must dominate the candidate point")
    before = dto(q, utopia)
    dp = utopia.performance + b - q.performance
    df = utopia.fairness - q.fairness
    return before, math.sqrt(dp * dp + df * df)


def frontier_from_arrays(perf: Sequence[float], fair: Sequence[float]) -> Frontier:
    return pareto_frontier(zip(perf, fair))
