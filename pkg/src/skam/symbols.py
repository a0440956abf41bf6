"""Finite Fourier symbols P(x, xi) = sum_k P~(k, xi) e^{ik.x} on the torus and their calculus."""

from __future__ import annotations

import itertools
import math

import numpy as np

from . import fields as F
from .context import SemiclassicalContext, SupportOverflowError

#: coefficients whose sup over the validation grid falls below this are dropped
PRUNE_TOL = 1e-14
#: default maximal support size produced by an algebraic operation
SUPPORT_CAP = 4096


def _key(k) -> tuple:
    return tuple(int(c) for c in k)


class FourierSymbol:
    """A band-limited symbol on T^d x R^d.

    Parameters
    ----------
    ctx : SemiclassicalContext
        Parameters shared by all symbols entering the same computation.
    coeffs : mapping
        ``k -> CoefficientField`` giving P~(k, xi). Keys are integer d-tuples.
        Zero constant fields are dropped; numerical pruning is done by
        :func:`prune`.
    """

    __slots__ = ("ctx", "_coeffs")

    def __init__(self, ctx: SemiclassicalContext, coeffs=None):
        self.ctx = ctx
        items = []
        for k, f in (coeffs or {}).items():
            k = _key(k)
            if len(k) != ctx.d:
                raise ValueError(f"mode {k} does not have dimension {ctx.d}")
            f = F.as_field(f)
            if not f.is_zero:
                items.append((k, f))
        items.sort()
        self._coeffs = dict(items)

    # -- construction -------------------------------------------------------
    @classmethod
    def zero(cls, ctx):
        return cls(ctx)

    @classmethod
    def constant(cls, ctx, c):
        return cls(ctx, {(0,) * ctx.d: F.Const(c)})

    @classmethod
    def from_xi(cls, ctx, field):
        """x-independent symbol with the given coefficient field."""
        return cls(ctx, {(0,) * ctx.d: field})

    @classmethod
    def from_modes(cls, ctx, modes):
        """Build from ``{k: coefficient}`` where a coefficient is a number or a field."""
        return cls(ctx, {k: F.as_field(c) for k, c in modes.items()})

    # -- access -------------------------------------------------------------
    @property
    def d(self) -> int:
        return self.ctx.d

    @property
    def support(self) -> list:
        return list(self._coeffs)

    @property
    def coeffs(self) -> dict:
        return dict(self._coeffs)

    def coeff(self, k) -> F.Field:
        return self._coeffs.get(_key(k), F.ZERO)

    def __contains__(self, k) -> bool:
        return _key(k) in self._coeffs

    def __len__(self) -> int:
        return len(self._coeffs)

    @property
    def is_zero(self) -> bool:
        return not self._coeffs

    @property
    def x_independent(self) -> bool:
        return all(not any(k) for k in self._coeffs)

    @property
    def bandwidth(self) -> int:
        """Largest sup-norm |k|_inf over the support."""
        if not self._coeffs:
            return 0
        return max(max(abs(c) for c in k) for k in self._coeffs)

    @property
    def support_radius(self) -> float:
        """Largest Euclidean norm over the support."""
        if not self._coeffs:
            return 0.0
        return max(math.sqrt(sum(c * c for c in k)) for k in self._coeffs)

    def with_coeffs(self, coeffs) -> "FourierSymbol":
        return FourierSymbol(self.ctx, coeffs)

    # -- evaluation ---------------------------------------------------------
    def coeff_values(self, xi, evaluator: F.Evaluator | None = None) -> dict:
        """Evaluate every coefficient at the points ``xi`` (shape (n, d))."""
        ev = evaluator if evaluator is not None else F.Evaluator(xi)
        return {k: ev(f) for k, f in self._coeffs.items()}

    def evaluate(self, x, xi) -> np.ndarray:
        """Values on the product grid ``x`` (nx, d) times ``xi`` (nxi, d), shape (nx, nxi)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        out = np.zeros((x.shape[0], xi.shape[0]), dtype=complex)
        for k, vals in self.coeff_values(xi).items():
            out += np.exp(1j * (x @ np.asarray(k, dtype=float)))[:, None] * vals[None, :]
        return out

    def __call__(self, x, xi):
        return eval_symbol(self, x, xi)

    # -- arithmetic ---------------------------------------------------------
    def _check(self, other):
        if not isinstance(other, FourierSymbol):
            raise TypeError("expected a FourierSymbol")
        if not self.ctx.compatible(other.ctx):
            raise ValueError("symbols live in incompatible semiclassical contexts")

    def __add__(self, other):
        if not isinstance(other, FourierSymbol):
            other = FourierSymbol.constant(self.ctx, other)
        self._check(other)
        keys = set(self._coeffs) | set(other._coeffs)
        return FourierSymbol(self.ctx, {k: F.add(self.coeff(k), other.coeff(k)) for k in keys})

    __radd__ = __add__

    def __neg__(self):
        return self.scaled(-1.0)

    def __sub__(self, other):
        if not isinstance(other, FourierSymbol):
            other = FourierSymbol.constant(self.ctx, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c):
        if isinstance(c, FourierSymbol):
            return pointwise_product(self, c)
        return self.scaled(c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self.scaled(1.0 / c)

    def scaled(self, c) -> "FourierSymbol":
        return FourierSymbol(self.ctx, {k: F.scale(c, f) for k, f in self._coeffs.items()})

    def __repr__(self):
        return f"FourierSymbol(d={self.d}, hbar={self.ctx.hbar}, support={self.support})"


# ----------------------------------------------------------------- basics


def eval_symbol(P: FourierSymbol, x, xi) -> complex:
    """P(x, xi) = sum_k P~(k, xi) e^{ik.x} at one phase-space point."""
    x = np.asarray(x, dtype=float).reshape(-1)
    xi = np.asarray(xi, dtype=float).reshape(1, -1)
    total = 0j
    for k, vals in P.coeff_values(xi).items():
        total += complex(vals[0]) * np.exp(1j * float(np.dot(k, x)))
    return total


def coeff_sup(field: F.Field, xi) -> float:
    vals = F.Evaluator(xi)(field)
    return float(np.max(np.abs(vals))) if vals.size else 0.0


def prune(P: FourierSymbol, tol: float = PRUNE_TOL, xi=None) -> FourierSymbol:
    """Drop coefficients whose sup over the validation xi-grid is below ``tol``."""
    if P.is_zero or tol <= 0:
        return P
    grid = P.ctx.xi_grid() if xi is None else xi
    ev = F.Evaluator(grid)
    keep = {}
    for k, f in P._coeffs.items():
        vals = ev(f)
        if np.max(np.abs(vals)) >= tol:
            keep[k] = f
    return FourierSymbol(P.ctx, keep)


def torus_average(P: FourierSymbol) -> FourierSymbol:
    """<<P>>: the k = 0 mode only."""
    zero = (0,) * P.d
    return FourierSymbol(P.ctx, {zero: P.coeff(zero)})


def lattice_average(P: FourierSymbol, R) -> FourierSymbol:
    """Keep the modes lying in the sub-lattice ``R`` (anything with ``contains``)."""
    return FourierSymbol(P.ctx, {k: f for k, f in P._coeffs.items() if R.contains(k)})


def adjoint(P: FourierSymbol) -> FourierSymbol:
    """Symbol of the adjoint operator: P*~(k, xi) = conj P~(-k, xi + hbar k)."""
    h = P.ctx.hbar
    out = {}
    for k, f in P._coeffs.items():
        mk = tuple(-c for c in k)
        out[mk] = F.conj(F.shift(f, [h * c for c in mk]))
    return FourierSymbol(P.ctx, out)


def selfadjoint_part(P: FourierSymbol) -> FourierSymbol:
    return (P + adjoint(P)).scaled(0.5)


def _minkowski(SA, SB, cap):
    out = {}
    for a in SA:
        for b in SB:
            out.setdefault(tuple(x + y for x, y in zip(a, b)), None)
    if len(out) > cap:
        raise SupportOverflowError(
            f"support of size {len(out)} exceeds the cap {cap}; truncation would be required")
    return sorted(out)


def moyal_product(A: FourierSymbol, B: FourierSymbol, cap: int = SUPPORT_CAP,
                  tol: float = PRUNE_TOL) -> FourierSymbol:
    """Exact left Moyal product of band-limited symbols.

    (A#B)~(m, xi) = sum_{k in S_B} A~(m - k, xi + hbar k) B~(k, xi).
    """
    A._check(B)
    h = A.ctx.hbar
    terms: dict = {}
    _minkowski(A._coeffs, B._coeffs, cap)
    for kb, fb in B._coeffs.items():
        off = [h * c for c in kb]
        for ka, fa in A._coeffs.items():
            m = tuple(x + y for x, y in zip(ka, kb))
            terms.setdefault(m, []).append(F.mul(F.shift(fa, off), fb))
    out = FourierSymbol(A.ctx, {m: F.add(*ts) for m, ts in terms.items()})
    return prune(out, tol)


def pointwise_product(A: FourierSymbol, B: FourierSymbol, cap: int = SUPPORT_CAP) -> FourierSymbol:
    """Ordinary product of functions on phase space (convolution of Fourier modes)."""
    A._check(B)
    _minkowski(A._coeffs, B._coeffs, cap)
    terms: dict = {}
    for kb, fb in B._coeffs.items():
        for ka, fa in A._coeffs.items():
            m = tuple(x + y for x, y in zip(ka, kb))
            terms.setdefault(m, []).append(F.mul(fa, fb))
    return FourierSymbol(A.ctx, {m: F.add(*ts) for m, ts in terms.items()})


def commutator(A: FourierSymbol, B: FourierSymbol, cap: int = SUPPORT_CAP,
               tol: float = PRUNE_TOL) -> FourierSymbol:
    """A#B - B#A."""
    return prune(moyal_product(A, B, cap, 0.0) - moyal_product(B, A, cap, 0.0), tol)


def _multi_indices(d: int, order: int):
    for alpha in itertools.product(range(order + 1), repeat=d):
        if sum(alpha) == order:
            yield alpha


def x_derivative(P: FourierSymbol, alpha) -> FourierSymbol:
    """d_x^alpha P, exact in Fourier: multiply mode k by (ik)^alpha."""
    out = {}
    for k, f in P._coeffs.items():
        c = complex(np.prod([(1j * kc) ** a for kc, a in zip(k, alpha)]))
        out[k] = F.scale(c, f)
    return FourierSymbol(P.ctx, out)


def xi_derivative(P: FourierSymbol, beta) -> FourierSymbol:
    """d_xi^beta P, coefficientwise."""
    return FourierSymbol(P.ctx, {k: f.derivative(beta) for k, f in P._coeffs.items()})


def moyal_expansion_term(A: FourierSymbol, B: FourierSymbol, j: int) -> FourierSymbol:
    """C_j = (hbar/i)^j sum_{|alpha|=j} d_xi^alpha A d_x^alpha B / alpha!."""
    if j < 0:
        raise ValueError("expansion order must be nonnegative")
    A._check(B)
    pref = (A.ctx.hbar / 1j) ** j
    total = FourierSymbol.zero(A.ctx)
    for alpha in _multi_indices(A.d, j):
        fact = float(np.prod([math.factorial(a) for a in alpha]))
        term = pointwise_product(xi_derivative(A, alpha), x_derivative(B, alpha))
        total = total + term.scaled(pref / fact)
    return prune(total)


def poisson_with_H(P: FourierSymbol, H) -> FourierSymbol:
    """{P, H} for x-independent H: mode k multiplied by i Omega_k(xi); the k = 0 mode vanishes."""
    out = {}
    for k, f in P._coeffs.items():
        if not any(k):
            continue
        out[k] = F.mul(F.scale(1j, H.omega_field(k)), f)
    return FourierSymbol(P.ctx, out)


# ------------------------------------------------------------- comparison


def max_coeff_difference(P: FourierSymbol, Q: FourierSymbol, xi=None) -> float:
    """Largest coefficientwise difference over a xi-grid (validation grid by default)."""
    grid = P.ctx.xi_grid() if xi is None else xi
    ev = F.Evaluator(grid)
    worst = 0.0
    for k in set(P._coeffs) | set(Q._coeffs):
        diff = ev(P.coeff(k)) - ev(Q.coeff(k))
        worst = max(worst, float(np.max(np.abs(diff))))
    return worst


def sup_norm(P: FourierSymbol, x=None, xi=None) -> float:
    """Sup of |P(x, xi)| over the validation grid."""
    x = P.ctx.x_grid() if x is None else x
    xi = P.ctx.xi_grid() if xi is None else xi
    if P.is_zero:
        return 0.0
    return float(np.max(np.abs(P.evaluate(x, xi))))


def selfadjoint_defect(P: FourierSymbol, xi=None) -> float:
    return max_coeff_difference(P, adjoint(P), xi)


def is_selfadjoint(P: FourierSymbol, tol: float = 1e-10, xi=None) -> bool:
    return selfadjoint_defect(P, xi) <= tol


def is_real(P: FourierSymbol, tol: float = 1e-12, xi=None) -> bool:
    """Reality test P~(-k, xi) = conj P~(k, xi) on a grid."""
    grid = P.ctx.xi_grid() if xi is None else xi
    ev = F.Evaluator(grid)
    for k in P._coeffs:
        mk = tuple(-c for c in k)
        if np.max(np.abs(ev(P.coeff(mk)) - np.conj(ev(P.coeff(k))))) > tol:
            return False
    return True
