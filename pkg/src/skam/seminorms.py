"""Grid estimates of the symbol seminorms sup |d_x^a d_xi^b P| <= C hbar^(m - delta |b|)."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .fitting import fit_slope
from .symbols import FourierSymbol, x_derivative, xi_derivative


@dataclass
class SeminormReport:
    """Sup-norm table keyed by (alpha, beta) and the implied constants C_{alpha,beta}."""

    m: float
    delta: float
    hbar: float
    table: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)


def _indices(d: int, order: int):
    return [a for a in itertools.product(range(order + 1), repeat=d) if sum(a) <= order]


def seminorm_estimate(P: FourierSymbol, max_order: int, x=None, xi=None, m: float = 0.0,
                      x_order: int | None = None) -> SeminormReport:
    """Grid sup-norms of d_x^alpha d_xi^beta P for |alpha| <= x_order, |beta| <= max_order.

    ``x_order`` defaults to ``max_order``; the grids default to the validation grids.
    """
    ctx = P.ctx
    x = ctx.x_grid() if x is None else x
    xi = ctx.xi_grid() if xi is None else xi
    xo = max_order if x_order is None else x_order
    rep = SeminormReport(m, ctx.delta, ctx.hbar)
    for beta in _indices(ctx.d, max_order):
        Pb = xi_derivative(P, beta)
        for alpha in _indices(ctx.d, xo):
            Q = x_derivative(Pb, alpha)
            sup = float(np.max(np.abs(Q.evaluate(x, xi)))) if not Q.is_zero else 0.0
            rep.table[(alpha, beta)] = sup
            rep.constants[(alpha, beta)] = sup / ctx.hbar ** (m - ctx.delta * sum(beta))
    return rep


def constant_growth(reports, floor: float = 1e-300) -> dict:
    """Fitted hbar-slope of each constant over a sweep; negative slopes mean growth as hbar -> 0."""
    hs = [r.hbar for r in reports]
    out = {}
    for key in reports[0].constants:
        vals = [r.constants[key] for r in reports]
        if sum(v > floor for v in vals) < 2:
            out[key] = 0.0
            continue
        out[key] = fit_slope(hs, vals, floor).slope
    return out


def certify_bounded(reports, slack: float = 0.2) -> tuple[bool, dict]:
    """Numerical membership certificate: no constant grows faster than hbar^-slack."""
    growth = constant_growth(reports)
    return all(g >= -slack for g in growth.values()), growth
