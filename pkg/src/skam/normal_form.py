"""Iterative quasi-resonant normal form at the symbol level.

Each step solves the self-adjoint homological equation for the current
remainder and conjugates by ``exp(i hbar^(kappa-1) P_n)``. The conjugation is
expanded in nested Moyal commutators and truncated after ``M`` terms, so the
only approximation is that truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .averaging import require_selfadjoint, selfadjoint_homological
from .context import ParameterError, ResonanceError, SupportOverflowError
from .resonance import resonance_lattices, zone_mask
from .symbols import SUPPORT_CAP, FourierSymbol, commutator, sup_norm

DEFAULT_N = 3
DEFAULT_M = 6


def conjugate_expand(P: FourierSymbol, B: FourierSymbol, scale: float, M: int,
                     cap: int = SUPPORT_CAP) -> FourierSymbol:
    """sum_{n=0}^{M} (i scale)^n / n! ad_P^n(B), the expansion of e^{i scale P} B e^{-i scale P}."""
    return B + conjugate_increment(P, B, scale, M, cap)


def conjugate_increment(P: FourierSymbol, B: FourierSymbol, scale: float, M: int,
                        cap: int = SUPPORT_CAP) -> FourierSymbol:
    """The n >= 1 part of :func:`conjugate_expand`."""
    if M < 1:
        raise ValueError("need at least one commutator term (M >= 1)")
    total = FourierSymbol.zero(B.ctx)
    term = B
    for n in range(1, M + 1):
        try:
            term = commutator(P, term, cap)
        except SupportOverflowError as exc:
            raise SupportOverflowError(f"commutator term {n}: {exc}") from exc
        if term.is_zero:
            break
        total = total + term.scaled((1j * scale) ** n / math.factorial(n))
    return total


@dataclass
class NormalFormStep:
    """Generator P_n (used as exp(i hbar^(kappa-1) P_n)), averaged piece A_n and remainder K_{n+1}."""

    P: FourierSymbol
    A: FourierSymbol
    K_next: FourierSymbol


@dataclass
class NormalFormResult:
    ctx: object
    H: object
    K0: FourierSymbol
    N: int
    M: int
    steps: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def effective_average(self) -> FourierSymbol:
        total = FourierSymbol.zero(self.ctx)
        for s in self.steps:
            total = total + s.A
        return total

    @property
    def remainders(self) -> list:
        return [s.K_next for s in self.steps]


def normal_form_iterate(H, K0: FourierSymbol, N: int = DEFAULT_N, M: int = DEFAULT_M,
                        cap: int = SUPPORT_CAP, diagnostics: bool = True) -> NormalFormResult:
    """Run N normal-form steps.

    For n = 0..N-1 the self-adjoint homological solution (P_sa, A_n) of K_n is
    computed and the generator is P_n = -P_sa, so that conjugation by
    exp(i hbar^(kappa-1) P_n) removes K_n - A_n at leading order. The new
    remainder is K_{n+1} = K_n - A_n + hbar^-kappa * (conjugate_expand(P_n, B_n) - B_n)
    with B_n = H + hbar^kappa (A_0 + ... + A_{n-1} + K_n).
    """
    ctx = K0.ctx
    if ctx.violations():
        raise ParameterError("; ".join(ctx.violations()))
    if N < 0:
        raise ValueError("N must be nonnegative")
    require_selfadjoint(K0, what="K0")
    if K0.support_radius > ctx.resonance_bound * (1 + 1e-9):
        raise ParameterError(f"K0 support radius {K0.support_radius:g} exceeds hbar^-gamma = {ctx.resonance_bound:g}")
    h_k = ctx.hbar ** ctx.kappa
    s = ctx.hbar ** (ctx.kappa - 1.0)
    Hs = H.symbol(ctx)
    result = NormalFormResult(ctx, H, K0, N, M)
    K = K0
    A_sum = FourierSymbol.zero(ctx)
    for n in range(N):
        P_sa, A = selfadjoint_homological(K, H)
        P = -P_sa
        B = Hs + (A_sum + K).scaled(h_k)
        K_next = K - A + conjugate_increment(P, B, s, M, cap).scaled(1.0 / h_k)
        result.steps.append(NormalFormStep(P, A, K_next))
        if diagnostics:
            result.diagnostics.append({
                "step": n,
                "remainder_norm": sup_norm(K_next),
                "support_size": len(K_next),
                "generator_support": len(P),
            })
        A_sum = A_sum + A
        K = K_next
    return result


def resonant_lattice_at(xi, H, ctx):
    """First one-dimensional resonance lattice whose zone contains ``xi``, or None."""
    for R in resonance_lattices(1, ctx):
        if zone_mask(xi, R, H, ctx)[0]:
            return R
    return None


def effective_eigenvalue(nf: NormalFormResult, k) -> float:
    """H(hbar k) + hbar^kappa * (k = 0 coefficient of the effective average at hbar k)."""
    ctx = nf.ctx
    xi = ctx.hbar * np.asarray(k, dtype=float).reshape(1, -1)
    R = resonant_lattice_at(xi, nf.H, ctx)
    if R is not None:
        raise ResonanceError(f"hbar k = {xi[0].tolist()} lies in the resonance zone of {R.to_list()}")
    zero = (0,) * ctx.d
    avg = sum((complex(s.A.coeff(zero).evaluate(xi)[0]) for s in nf.steps), 0j)
    return float(nf.H(xi)[0] + ctx.hbar ** ctx.kappa * avg.real)


def omitted_term_bound(P: FourierSymbol, B: FourierSymbol, scale: float, M: int) -> float:
    """Crude bound (2|P| scale)^(M+1) |B| / (M+1)! on the first omitted commutator term."""
    p = sup_norm(P)
    return (2.0 * p * scale) ** (M + 1) * sup_norm(B) / math.factorial(M + 1)


def choose_M(H, K0: FourierSymbol, N: int, M_max: int = 12) -> int:
    """Smallest M whose first omitted term bound for step 0 is below hbar^(kappa + (N+1) alpha).

    Call it at the largest hbar of a sweep; the bound only shrinks as hbar decreases.
    """
    ctx = K0.ctx
    if K0.is_zero:
        return 1
    P = -selfadjoint_homological(K0, H)[0]
    B = H.symbol(ctx) + K0.scaled(ctx.hbar ** ctx.kappa)
    s = ctx.hbar ** (ctx.kappa - 1.0)
    target = ctx.hbar ** (ctx.kappa + (N + 1) * ctx.alpha)
    for M in range(1, M_max + 1):
        if omitted_term_bound(P, B, s, M) < target:
            return M
    raise ParameterError(f"no M <= {M_max} brings the omitted commutator term below {target:.3e}")
