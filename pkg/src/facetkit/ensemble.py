"""Composite raters built by averaging member scores, plus greedy pruning.

The paper-style workflow: average a pool of raters into one meta-rater,
then repeatedly drop the member whose removal most improves agreement
with benchmark raters.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .agreement import DegenerateMarginalsError, qwk_vectors
from .ratings import RatingsTensor
from .rounding import ROUNDING_MODES


@dataclass(frozen=True)
class EnsembleSpec:
    """A named meta-rater averaging the given member raters' scores."""

    name: str
    members: tuple
    rounding: str = "half-away-from-zero"

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ValueError("ensemble needs at least one member")
        if len(set(self.members)) != len(self.members):
            raise ValueError("duplicate ensemble member")
        if self.rounding not in ROUNDING_MODES:
            raise ValueError(
                f"unknown rounding {self.rounding!r}; choose from {sorted(ROUNDING_MODES)}"
            )


def _member_mean(tensor, members, rounding):
    """Per (person, item) mean of present member scores, rounded and clamped."""
    for m in members:
        if m not in tensor.ids.rater_index:
            raise KeyError(f"unknown rater identifier {m!r}")
    cols = [tensor.ids.rater_index[m] for m in members]
    block = tensor.values[:, :, cols]
    have = ~np.isnan(block)
    n = have.sum(axis=2)
    with np.errstate(invalid="ignore"):
        mean = np.where(n > 0, np.nansum(block, axis=2) / np.maximum(n, 1), np.nan)
    rounded = ROUNDING_MODES[rounding](mean)
    rounded = np.clip(rounded, tensor.scale.min_score, tensor.scale.max_score)
    rounded = np.where(n > 0, rounded, np.nan)
    return rounded, n


def build_ensemble(tensor: RatingsTensor, spec: EnsembleSpec) -> RatingsTensor:
    """Tensor extended with the ensemble as a new rater.

    Cells where no member scored become declared-missing, with a warning.
    """
    scores, n = _member_mean(tensor, spec.members, spec.rounding)
    if (n == 0).any():
        warnings.warn(
            f"ensemble {spec.name!r}: {(n == 0).sum()} cells have no member scores; "
            "left missing"
        )
    return tensor.with_rater(
        spec.name,
        scores,
        declared_missing=(n == 0),
        integer_scores=tensor.integer_scores and spec.rounding != "none",
    )


@dataclass(frozen=True)
class PruneStep:
    """One state of the pruning chain: membership and its benchmark QWKs."""

    removed: object  # None for the initial full ensemble
    members: tuple
    mean_qwk: float
    cell_qwks: tuple  # ((benchmark, item, kappa or nan), ...)


@dataclass(frozen=True)
class PruneTrace:
    steps: tuple = field(default_factory=tuple)

    @property
    def removal_order(self):
        return tuple(s.removed for s in self.steps[1:])

    def to_records(self):
        rows = []
        for i, step in enumerate(self.steps):
            for bench, item, kappa in step.cell_qwks:
                rows.append(
                    {
                        "step": i,
                        "removed": "" if step.removed is None else step.removed,
                        "members": "+".join(str(m) for m in step.members),
                        "benchmark": bench,
                        "item": item,
                        "kappa": kappa,
                        "mean_qwk": step.mean_qwk,
                    }
                )
        return rows


def _ensemble_qwks(tensor, members, benchmarks, items, rounding):
    """Mean QWK of the member-average rater against each benchmark x item.

    Returns (mean, cells); any degenerate or under-populated cell pushes
    the mean to -inf so the candidate can never win a pruning step.
    """
    scores, _ = _member_mean(tensor, members, rounding)
    cells = []
    kappas = []
    poisoned = False
    for bench in benchmarks:
        bcol = tensor.ids.rater_index[bench]
        for item in items:
            icol = tensor.ids.item_index[item]
            a = scores[:, icol]
            b = tensor.values[:, icol, bcol]
            both = ~np.isnan(a) & ~np.isnan(b)
            try:
                kappa, _, _ = qwk_vectors(
                    a[both], b[both], tensor.scale.min_score, tensor.scale.max_score
                )
            except (DegenerateMarginalsError, ValueError):
                kappa = math.nan
                poisoned = True
            cells.append((bench, item, kappa))
            kappas.append(kappa)
    mean = -math.inf if poisoned else float(np.mean(kappas))
    return mean, tuple(cells)


def removal_chain(members, removals, names) -> tuple:
    """Ensemble specs for an explicit, already-decided removal sequence.

    ``removals`` lists the raters dropped at each step (a step may drop
    several); ``names`` names the full ensemble plus one name per step.
    Use this to replay a known pruning chain instead of :func:`greedy_prune`.
    """
    removals = [list(step) for step in removals]
    if len(names) != len(removals) + 1:
        raise ValueError(
            f"need {len(removals) + 1} names (full ensemble + one per step), "
            f"got {len(names)}"
        )
    current = list(members)
    specs = [EnsembleSpec(names[0], tuple(current))]
    for step, name in zip(removals, names[1:]):
        for rater in step:
            if rater not in current:
                raise ValueError(f"cannot remove {rater!r}: not a current member")
            current = [m for m in current if m != rater]
        specs.append(EnsembleSpec(name, tuple(current)))
    return tuple(specs)


def greedy_prune(tensor: RatingsTensor, members, benchmarks, items=None,
                 steps: int = 1, rounding: str = "half-away-from-zero") -> PruneTrace:
    """Drop, one at a time, the member whose removal most improves QWK.

    At each step every remaining member is tentatively removed, the
    reduced ensemble's mean QWK over (benchmarks x items) recomputed, and
    the best removal kept.  Ties break toward the earlier rater in tensor
    order.  The returned trace starts with the full ensemble.
    """
    members = list(members)
    benchmarks = list(benchmarks)
    if items is None:
        items = list(tensor.ids.items)
    items = list(items)
    if set(members) & set(benchmarks):
        raise ValueError("benchmarks must be disjoint from ensemble members")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if len(members) <= steps:
        raise ValueError(f"cannot remove {steps} of {len(members)} members")
    for r in benchmarks:
        if r not in tensor.ids.rater_index:
            raise KeyError(f"unknown rater identifier {r!r}")

    # canonical member order: the tensor's rater order
    order = {r: i for i, r in enumerate(tensor.ids.raters)}
    current = sorted(members, key=lambda m: order[m])

    mean, cells = _ensemble_qwks(tensor, current, benchmarks, items, rounding)
    trace = [PruneStep(None, tuple(current), mean, cells)]
    for _ in range(steps):
        best = None
        for m in current:
            reduced = [r for r in current if r != m]
            mean, cells = _ensemble_qwks(tensor, reduced, benchmarks, items, rounding)
            if best is None or mean > best[0]:
                best = (mean, m, reduced, cells)
        mean, removed, current, cells = best
        trace.append(PruneStep(removed, tuple(current), mean, cells))
    return PruneTrace(tuple(trace))
