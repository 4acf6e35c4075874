"""Classical agreement statistics: quadratic weighted kappa and Cronbach alpha.

Kappa uses the disagreement-weight formulation with weights
``(a - b)^2 / span^2`` over the full declared scale, so results are
deterministic across slices even when some categories are never observed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ratings import RatingsTensor


class DegenerateMarginalsError(ValueError):
    """Both raters constant on the same single category: kappa is undefined."""


@dataclass(frozen=True)
class QwkResult:
    rater_a: object
    rater_b: object
    item_group: tuple
    n_pairs: int
    kappa: float
    observed_disagreement: float
    expected_disagreement: float
    degenerate: bool = False


@dataclass(frozen=True)
class AlphaResult:
    rater: object
    item_group: tuple
    n_items: int
    n_persons: int
    alpha: float


@dataclass(frozen=True)
class AgreementTable:
    """QWK results in deterministic candidate-major, benchmark-minor order."""

    rows: tuple

    def to_records(self):
        return [
            {
                "candidate": r.rater_a,
                "benchmark": r.rater_b,
                "items": ",".join(str(i) for i in r.item_group),
                "n_pairs": r.n_pairs,
                "kappa": None if r.degenerate else r.kappa,
                "degenerate": r.degenerate,
            }
            for r in self.rows
        ]


def _paired_scores(tensor, rater_a, rater_b, items):
    """Paired (person, item) score vectors where both raters are present."""
    for r in (rater_a, rater_b):
        if r not in tensor.ids.rater_index:
            raise KeyError(f"unknown rater identifier {r!r}")
    items = tuple(items)
    for it in items:
        if it not in tensor.ids.item_index:
            raise KeyError(f"unknown item identifier {it!r}")
    ia = tensor.ids.rater_index[rater_a]
    ib = tensor.ids.rater_index[rater_b]
    cols = [tensor.ids.item_index[it] for it in items]
    a = tensor.values[:, cols, ia].ravel()
    b = tensor.values[:, cols, ib].ravel()
    both = ~np.isnan(a) & ~np.isnan(b)
    return a[both], b[both]


def _weight_matrix(n_cat, span, weighting):
    cats = np.arange(n_cat)
    diff = cats[:, None] - cats[None, :]
    if weighting == "quadratic":
        return diff**2 / span**2
    if weighting == "linear":
        return np.abs(diff) / span
    if weighting == "unweighted":
        return (diff != 0).astype(float)
    raise ValueError(f"unknown weighting {weighting!r}")


def qwk_vectors(a, b, min_score, max_score, weighting="quadratic"):
    """Quadratic weighted kappa for two paired integer score vectors.

    Returns (kappa, observed_disagreement, expected_disagreement).
    Raises :class:`DegenerateMarginalsError` when chance disagreement is zero.
    ``weighting`` is an escape hatch for linear or unweighted variants.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired score vectors must be 1-d and equal length")
    if a.size < 2:
        raise ValueError(f"need at least 2 paired observations, got {a.size}")
    if not (np.all(a == np.round(a)) and np.all(b == np.round(b))):
        raise ValueError("kappa requires integer score categories")
    n_cat = max_score - min_score + 1
    span = max_score - min_score
    ai = (a - min_score).astype(int)
    bi = (b - min_score).astype(int)
    if ai.min() < 0 or ai.max() >= n_cat or bi.min() < 0 or bi.max() >= n_cat:
        raise ValueError("score outside the declared scale")

    n = a.size
    counts = np.zeros((n_cat, n_cat))
    np.add.at(counts, (ai, bi), 1.0)
    row = counts.sum(axis=1)
    col = counts.sum(axis=0)

    weights = _weight_matrix(n_cat, span, weighting)
    # symmetrized count form: integer-valued sums keep the +-1 anchors exact
    # and make qwk(a, b) == qwk(b, a) bit for bit
    obs2 = float((weights * (counts + counts.T)).sum())
    exp2 = float((weights * (np.outer(row, col) + np.outer(col, row))).sum())
    if exp2 == 0.0:
        raise DegenerateMarginalsError(
            "degenerate marginals: both raters constant on the same category"
        )
    kappa = 1.0 - n * obs2 / exp2
    return kappa, obs2 / (2 * n), exp2 / (2 * n**2)


def qwk(tensor: RatingsTensor, rater_a, rater_b, items=None,
        weighting="quadratic") -> QwkResult:
    """QWK between two raters over an item group.

    Scores are pooled over the group: each (person, item) pair where both
    raters scored contributes one paired observation.
    """
    if items is None:
        items = tensor.ids.items
    items = tuple(items)
    a, b = _paired_scores(tensor, rater_a, rater_b, items)
    kappa, observed, expected = qwk_vectors(
        a, b, tensor.scale.min_score, tensor.scale.max_score, weighting
    )
    return QwkResult(rater_a, rater_b, items, int(a.size), kappa, observed, expected)


def qwk_matrix(tensor, benchmark_raters, candidate_raters, item_groups) -> AgreementTable:
    """One QWK per (candidate, benchmark, item group); degenerate cells flagged."""
    rows = []
    for cand in candidate_raters:
        for bench in benchmark_raters:
            for group in item_groups:
                group = tuple(group)
                try:
                    rows.append(qwk(tensor, cand, bench, group))
                except DegenerateMarginalsError:
                    a, b = _paired_scores(tensor, cand, bench, group)
                    rows.append(
                        QwkResult(cand, bench, group, int(a.size),
                                  math.nan, math.nan, 0.0, degenerate=True)
                    )
    return AgreementTable(tuple(rows))


def cronbach_alpha(tensor: RatingsTensor, rater, items) -> AlphaResult:
    """Cronbach alpha of one rater's scores across an item group.

    Persons with any missing item in the group are dropped listwise.
    Sample variances use the n-1 denominator.  Alpha can go negative;
    it is reported as computed, never clamped.
    """
    if rater not in tensor.ids.rater_index:
        raise KeyError(f"unknown rater identifier {rater!r}")
    items = tuple(items)
    if len(items) < 2:
        raise ValueError(f"need at least 2 items for alpha, got {len(items)}")
    for it in items:
        if it not in tensor.ids.item_index:
            raise KeyError(f"unknown item identifier {it!r}")
    ridx = tensor.ids.rater_index[rater]
    cols = [tensor.ids.item_index[it] for it in items]
    mat = tensor.values[:, cols, ridx]
    complete = ~np.isnan(mat).any(axis=1)
    mat = mat[complete]
    if mat.shape[0] < 2:
        raise ValueError(
            f"need at least 2 persons after listwise deletion, got {mat.shape[0]}"
        )
    totals = mat.sum(axis=1)
    total_var = totals.var(ddof=1)
    if total_var == 0.0:
        raise ValueError("no person variance: total scores are constant")
    k = len(items)
    item_vars = mat.var(axis=0, ddof=1)
    alpha = (k / (k - 1)) * (1.0 - item_vars.sum() / total_var)
    return AlphaResult(rater, items, k, int(mat.shape[0]), float(alpha))
