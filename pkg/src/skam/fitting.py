"""Least-squares power-law fits on dyadic sweeps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SlopeFit:
    """value ~ 2^intercept * hbar^slope, fitted on log2 scales."""

    slope: float
    intercept: float
    residual: float
    points: int

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept,
                "residual": self.residual, "points": self.points}


def fit_slope(hbars, values, floor: float = 0.0) -> SlopeFit:
    """Fit log2(value) = slope * log2(hbar) + intercept.

    Points with ``value <= floor`` are skipped; at least two points must remain.
    ``residual`` is the root-mean-square misfit in log2 units.
    """
    h = np.asarray(hbars, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = v > floor
    if keep.sum() < 2:
        raise ValueError("need at least two positive values for a slope fit")
    x, y = np.log2(h[keep]), np.log2(v[keep])
    A = np.stack([x, np.ones_like(x)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = float(np.sqrt(np.mean((A @ [slope, intercept] - y) ** 2)))
    return SlopeFit(float(slope), float(intercept), res, int(keep.sum()))


def dyadic(lo: int, hi: int) -> list[float]:
    """[2^-lo, ..., 2^-hi] for lo <= hi."""
    return [2.0 ** -j for j in range(lo, hi + 1)]
