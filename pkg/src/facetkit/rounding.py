"""Rounding rules for turning fractional score means back into categories."""

from __future__ import annotations

import numpy as np


def round_half_away(x):
    """Round to nearest integer, ties away from zero (3.5 -> 4, -3.5 -> -4)."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def round_half_even(x):
    """Round to nearest integer, ties to the even neighbor (banker's rounding)."""
    return np.rint(np.asarray(x, dtype=float))


ROUNDING_MODES = {
    "half-away-from-zero": round_half_away,
    "half-to-even": round_half_even,
    "none": lambda x: np.asarray(x, dtype=float),
}
