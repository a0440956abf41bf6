"""hbar^delta averages and the closed-form homological-equation solver."""

from __future__ import annotations

import math

from . import fields as F
from .context import NotSelfAdjointError
from .cutoff import chi, phi  # noqa: F401  (re-exported)
from .symbols import FourierSymbol, adjoint, max_coeff_difference, poisson_with_H, selfadjoint_defect


def _scaled_frequency(H, k, ctx) -> tuple[F.Field, float]:
    """Omega_k / (|k| hbar^delta) as a field, together with |k| hbar^delta."""
    width = math.sqrt(sum(c * c for c in k)) * ctx.hbar ** ctx.delta
    return F.scale(1.0 / width, H.omega_field(k)), width


def cutoff_field(H, k, ctx) -> F.Field:
    """chi(Omega_k(xi) / (|k| hbar^delta))."""
    arg, _ = _scaled_frequency(H, k, ctx)
    return F.Compose("chi", arg, 0, ctx.fd_step())


def hdelta_average(K: FourierSymbol, H) -> FourierSymbol:
    """A~(k) = chi(Omega_k / (|k| hbar^delta)) K~(k) for k != 0; the k = 0 mode is copied."""
    out = {}
    for k, f in K.coeffs.items():
        out[k] = f if not any(k) else F.mul(cutoff_field(H, k, K.ctx), f)
    return FourierSymbol(K.ctx, out)


def require_selfadjoint(K: FourierSymbol, tol: float = 1e-10, what: str = "K"):
    defect = selfadjoint_defect(K)
    if defect > tol:
        raise NotSelfAdjointError(f"{what} is not self-adjoint (coefficient defect {defect:.3e} > {tol:g})")


def selfadjoint_hdelta_average(K: FourierSymbol, H) -> FourierSymbol:
    """1/2 (A + A*) with A the hbar^delta average of the self-adjoint symbol K."""
    require_selfadjoint(K)
    A = hdelta_average(K, H)
    return (A + adjoint(A)).scaled(0.5)


def solve_homological(K: FourierSymbol, H) -> tuple[FourierSymbol, FourierSymbol]:
    """Solve i Omega_k P~ + K~ - A~ = 0 with A the hbar^delta average of K.

    P~(k) = i K~(k) phi(Omega_k / (|k| hbar^delta)) / (|k| hbar^delta) and P~(0) = 0.
    """
    ctx = K.ctx
    P = {}
    for k, f in K.coeffs.items():
        if not any(k):
            continue
        arg, width = _scaled_frequency(H, k, ctx)
        q = F.Compose("phi", arg, 0, ctx.fd_step())
        P[k] = F.mul(F.scale(1j / width, q), f)
    return FourierSymbol(ctx, P), hdelta_average(K, H)


def selfadjoint_homological(K: FourierSymbol, H) -> tuple[FourierSymbol, FourierSymbol]:
    """Self-adjoint parts (P + P*)/2 and (A + A*)/2 of the homological solution."""
    require_selfadjoint(K)
    P, A = solve_homological(K, H)
    P_sa = (P + adjoint(P)).scaled(0.5)
    A_sa = (A + adjoint(A)).scaled(0.5)
    return P_sa, A_sa


def homological_residual(P: FourierSymbol, K: FourierSymbol, A: FourierSymbol, H, xi=None) -> float:
    """sup over modes and grid of |i Omega_k P~ + K~ - A~|."""
    return max_coeff_difference(poisson_with_H(P, H) + K, A, xi)
