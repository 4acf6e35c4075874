"""Rating-scale many-facet Rasch model: category probabilities and moments.

The log-odds of adjacent score categories k-1 -> k equal
``ability - severity - difficulty - thresholds[k-1]``.  A single threshold
vector is shared by all items (rating-scale parameterization).  Category
indices run 0..K internally; reporting adds the scale minimum back.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ratings import RatingsTensor


@dataclass(frozen=True)
class ModelParams:
    """Logit measures for every facet element plus the shared thresholds.

    Positive severity lowers the chance of a high score; positive
    difficulty marks a harder item.  Ability is unconstrained; severity,
    difficulty, and thresholds are centered at zero when identified.
    """

    ability: np.ndarray
    severity: np.ndarray
    difficulty: np.ndarray
    thresholds: np.ndarray

    def __post_init__(self):
        for name in ("ability", "severity", "difficulty", "thresholds"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 1 or arr.size == 0:
                raise ValueError(f"{name} must be a non-empty 1-d array")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def validate_for(self, tensor: RatingsTensor) -> None:
        P, I, R = tensor.shape
        K = tensor.scale.num_categories - 1
        if (len(self.ability), len(self.severity), len(self.difficulty)) != (P, R, I):
            raise ValueError(
                f"parameter lengths ({len(self.ability)} persons, "
                f"{len(self.severity)} raters, {len(self.difficulty)} items) "
                f"do not match tensor shape {tensor.shape}"
            )
        if len(self.thresholds) != K:
            raise ValueError(
                f"expected {K} thresholds for {K + 1} categories, got {len(self.thresholds)}"
            )

    def is_identified(self, tol=1e-9) -> bool:
        return (
            abs(self.severity.sum()) <= tol
            and abs(self.difficulty.sum()) <= tol
            and abs(self.thresholds.sum()) <= tol
        )

    def to_dict(self) -> dict:
        return {
            "ability": self.ability.tolist(),
            "severity": self.severity.tolist(),
            "difficulty": self.difficulty.tolist(),
            "thresholds": self.thresholds.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        return cls(
            np.asarray(d["ability"], float),
            np.asarray(d["severity"], float),
            np.asarray(d["difficulty"], float),
            np.asarray(d["thresholds"], float),
        )


def category_probs(location, thresholds) -> np.ndarray:
    """Probability of each score category 0..K at the given logit location.

    ``location`` is ability - severity - difficulty; it may be a scalar or
    an array (an axis for the K+1 categories is appended).  Computed as a
    max-subtracted softmax over cumulative sums, so large locations cannot
    overflow.
    """
    thresholds = np.asarray(thresholds, dtype=float)
    location = np.asarray(location, dtype=float)
    K = thresholds.size
    # psi_k = k*location - sum(thresholds[:k]), psi_0 = 0
    cum = np.concatenate([[0.0], np.cumsum(thresholds)])
    psi = location[..., None] * np.arange(K + 1) - cum
    psi -= psi.max(axis=-1, keepdims=True)
    exppsi = np.exp(psi)
    return exppsi / exppsi.sum(axis=-1, keepdims=True)


def expected_score(location, thresholds):
    """Expected category index, strictly increasing in location."""
    p = category_probs(location, thresholds)
    K = np.asarray(thresholds).size
    e = p @ np.arange(K + 1, dtype=float)
    return float(e) if e.ndim == 0 else e


def score_variance(location, thresholds):
    """Variance of the category index; also d(expected_score)/d(location)."""
    p = category_probs(location, thresholds)
    k = np.arange(np.asarray(thresholds).size + 1, dtype=float)
    e = p @ k
    v = p @ k**2 - e**2
    return float(v) if v.ndim == 0 else v


def cell_locations(tensor: RatingsTensor, params: ModelParams):
    """(locations, observed 0-based categories) for every present cell."""
    params.validate_for(tensor)
    pidx, iidx, ridx = np.nonzero(tensor.present_mask)
    loc = params.ability[pidx] - params.severity[ridx] - params.difficulty[iidx]
    x = tensor.values[pidx, iidx, ridx] - tensor.scale.min_score
    return loc, x


def log_likelihood(tensor: RatingsTensor, params: ModelParams) -> float:
    """Sum of log category probabilities over all present cells."""
    loc, x = cell_locations(tensor, params)
    probs = category_probs(loc, params.thresholds)
    return float(np.sum(np.log(probs[np.arange(x.size), x.astype(int)])))
