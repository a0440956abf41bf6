"""The smooth cutoff chi and the quotient phi(t) = (1 - chi(t)) / t.

chi equals 1 on [-1/2, 1/2], vanishes for |t| >= 1 and uses the exponential
mollifier on the transition. Derivatives up to order 2 are analytic.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

MAX_ANALYTIC_ORDER = 2

# below this distance to 0 or 1 every derivative of step underflows to 0
_EDGE = 1e-3


def _step(u: np.ndarray, order: int) -> np.ndarray:
    """step(u) = s(1-u) / (s(1-u) + s(u)) on 0 < u < 1, written as expit(-g)."""
    out = np.zeros_like(u)
    inner = (u > _EDGE) & (u < 1.0 - _EDGE)
    v = u[inner]
    g = 1.0 / (1.0 - v) - 1.0 / v
    L = expit(-g)
    if order == 0:
        out[inner] = L
        out[u <= _EDGE] = 1.0
        # u >= 1 - _EDGE keeps 0
        return out
    dL = -L * (1.0 - L)
    g1 = 1.0 / (1.0 - v) ** 2 + 1.0 / v ** 2
    if order == 1:
        out[inner] = dL * g1
        return out
    d2L = dL * (2.0 * L - 1.0)
    g2 = 2.0 / (1.0 - v) ** 3 - 2.0 / v ** 3
    out[inner] = d2L * g1 ** 2 + dL * g2
    return out


def chi(t, order: int = 0):
    """Cutoff chi or its derivative of the given order (0, 1 or 2)."""
    if order > MAX_ANALYTIC_ORDER:
        raise ValueError(f"no analytic chi derivative of order {order}")
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    out = np.zeros_like(t)
    trans = (a > 0.5) & (a < 1.0)
    u = 2.0 * a[trans] - 1.0
    if order == 0:
        out[a <= 0.5] = 1.0
        out[trans] = _step(u, 0)
    elif order == 1:
        out[trans] = 2.0 * np.sign(t[trans]) * _step(u, 1)
    else:
        out[trans] = 4.0 * _step(u, 2)
    return out if out.ndim else float(out)


def phi(t, order: int = 0):
    """phi(t) = (1 - chi(t)) / t with phi = 0 on the plateau |t| <= 1/2."""
    if order > MAX_ANALYTIC_ORDER:
        raise ValueError(f"no analytic phi derivative of order {order}")
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    out = np.zeros_like(t)
    outer = a >= 1.0
    to = t[outer]
    trans = (a > 0.5) & (a < 1.0)
    tt = t[trans]
    c0 = 1.0 - chi(tt)
    if order == 0:
        out[outer] = 1.0 / to
        out[trans] = c0 / tt
    elif order == 1:
        out[outer] = -1.0 / to ** 2
        out[trans] = -chi(tt, 1) / tt - c0 / tt ** 2
    else:
        out[outer] = 2.0 / to ** 3
        out[trans] = -chi(tt, 2) / tt + 2.0 * chi(tt, 1) / tt ** 2 + 2.0 * c0 / tt ** 3
    return out if out.ndim else float(out)


FUNCTIONS = {"chi": chi, "phi": phi}
