"""Synthetic data: labelled prediction records and trade-off sweep manifests."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from fairpfc.dataset_io import DatasetSchema, PredictionRecord, Split
from fairpfc.errors import InputError
from fairpfc.selection import BASELINE_METHOD, CandidateRun, parse_manifest
from fairpfc.tradeoff import TradeoffPoint


@dataclass(frozen=True)
class FixtureSpec:
    """Per-cell sizes and TPR targets for :func:`generate_fixture`.

    ``confusion_spread`` controls where errors go: 0 sends every error of
    class c to class c+1 (mod C), 1 spreads them uniformly over the wrong
    classes.
    """

    schema: DatasetSchema
    n_per_cell: tuple[tuple[int, ...], ...]
    tpr_targets: tuple[tuple[float, ...], ...]
    confusion_spread: float = 1.0
    rng_seed: int = 0
    split: Split = Split.TEST

    def __post_init__(self):
        shape = (self.schema.n_classes, self.schema.n_groups)
        n = np.asarray(self.n_per_cell)
        t = np.asarray(self.tpr_targets, dtype=float)
        if n.shape != shape or t.shape != shape:
            raise InputError(f"n_per_cell and tpr_targets must be shaped {shape}, "
                             f"got {n.shape} and {t.shape}")
        if (n < 1).any():
            raise InputError("n_per_cell entries must be positive")
        if ((t <= 0) | (t > 1)).any():
            raise InputError("tpr_targets must lie in (0, 1]")
        if not 0 <= self.confusion_spread <= 1:
            raise InputError("confusion_spread must lie in [0, 1]")


def _wrong_class_probs(c: int, n_classes: int, spread: float) -> np.ndarray:
    probs = np.full(n_classes, spread / (n_classes - 1))
    probs[(c + 1) % n_classes] += 1.0 - spread
    probs[c] = 0.0
    return probs / probs.sum()


def generate_fixture(spec: FixtureSpec) -> list[PredictionRecord]:
    """Records whose cell (c, g) has exactly ``n_per_cell[c][g]`` instances.

    Each instance is predicted correctly with probability ``tpr_targets[c][g]``.
    Output is fully determined by ``rng_seed``.
    """
    rng = np.random.default_rng(spec.rng_seed)
    n_cls = spec.schema.n_classes
    records = []
    idx = 0
    for c in range(n_cls):
        wrong = _wrong_class_probs(c, n_cls, spec.confusion_spread)
        for g in range(spec.schema.n_groups):
            n = int(spec.n_per_cell[c][g])
            correct = rng.random(n) < spec.tpr_targets[c][g]
            guesses = rng.choice(n_cls, size=n, p=wrong)
            preds = np.where(correct, c, guesses)
            for k in preds:
                records.append(PredictionRecord(f"r{idx:07d}", c, int(k), g, spec.split))
                idx += 1
    return records


def uniform_fixture(schema: DatasetSchema, n: int, tpr, spread: float = 1.0,
                    seed: int = 0) -> FixtureSpec:
    shape = (schema.n_classes, schema.n_groups)
    tpr = np.broadcast_to(np.asarray(tpr, dtype=float), shape)
    return FixtureSpec(schema, tuple(tuple([n] * shape[1]) for _ in range(shape[0])),
                       tuple(map(tuple, tpr.tolist())), spread, seed)


# -- trade-off sweeps --------------------------------------------------------

# Anchor paths in (performance, fairness). Each method sweeps 20 configs
# along its path; the shapes make every method best under some criterion.
DIVERGENCE_PATHS = {
    "inlp": [(0.815, 0.625), (0.70, 0.66), (0.54, 0.75), (0.30, 0.99)],
    "adv": [(0.812, 0.595), (0.79, 0.645), (0.70, 0.72), (0.64, 0.83), (0.52, 0.90)],
    "dadv": [(0.812, 0.59), (0.80, 0.63), (0.74, 0.67), (0.68, 0.79), (0.62, 0.885)],
    "aadv": [(0.810, 0.585), (0.75, 0.64), (0.70, 0.78), (0.60, 0.86), (0.40, 0.95)],
}
VANILLA_DEV = (0.82, 0.58)
VANILLA_TEST = (0.825, 0.59)


def _along(anchors, n: int) -> np.ndarray:
    a = np.asarray(anchors, dtype=float)
    arc = np.r_[0.0, np.cumsum(np.hypot(*np.diff(a, axis=0).T))]
    s = np.linspace(0.0, arc[-1], n)
    return np.c_[np.interp(s, arc, a[:, 0]), np.interp(s, arc, a[:, 1])]


def divergence_manifest(seed: int = 0, n_configs: int = 20, n_seeds: int = 3,
                        noise: float = 0.004, digits: int = 6) -> list[CandidateRun]:
    """Four methods x ``n_configs`` x ``n_seeds`` plus a vanilla baseline.

    Dev points sit slightly below test points in fairness, mimicking the
    usual dev/test gap.
    """
    rng = np.random.default_rng(seed)
    runs = []
    for method, anchors in DIVERGENCE_PATHS.items():
        for i, (p, f) in enumerate(_along(anchors, n_configs)):
            for s in range(n_seeds):
                dp, df, tp, tf = rng.normal(0.0, noise, 4)
                dev = np.clip([p + dp, f - 0.02 + df], 0, 1).round(digits)
                test = np.clip([p + 0.005 + tp, f + 0.01 + tf], 0, 1).round(digits)
                runs.append(CandidateRun(method, f"{method}-c{i:02d}", s,
                                         TradeoffPoint(*dev), TradeoffPoint(*test),
                                         round(i / (n_configs - 1), digits)))
    for s in range(n_seeds):
        runs.append(CandidateRun(BASELINE_METHOD, f"{BASELINE_METHOD}-c00", s,
                                 TradeoffPoint(*VANILLA_DEV), TradeoffPoint(*VANILLA_TEST), 0.0))
    return runs


def shipped_divergence_manifest() -> list[CandidateRun]:
    """The frozen copy of ``divergence_manifest(seed=0)`` bundled with the package."""
    data = resources.files("fairpfc").joinpath("data/divergence_manifest.jsonl").read_bytes()
    return parse_manifest(data)
