"""Semiclassical parameters shared by every symbol and operator."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np


class ParameterError(ValueError):
    """Raised when the exponents violate a required inequality."""


class SupportOverflowError(RuntimeError):
    """Raised when an algebraic operation would exceed the Fourier support cap."""


class ResonanceError(ValueError):
    """Raised when a momentum lies in a resonance zone where it must not."""


#: number of x-points and xi-points per axis of the standard validation grid
X_POINTS = 17
XI_POINTS = 33


@dataclass(frozen=True)
class SemiclassicalContext:
    """Dimension, semiclassical parameter and the exponents (kappa, gamma, delta).

    ``alpha`` is always derived from ``kappa`` and ``delta``.
    """

    d: int
    hbar: float
    kappa: float = 2.0
    gamma: float = 0.05
    delta: float = 0.3
    xi_window: tuple[float, float] = field(default=(-2.0, 2.0))

    def __post_init__(self):
        for message in self.violations():
            raise ParameterError(message)

    def violations(self) -> list[str]:
        out = []
        if int(self.d) != self.d or self.d < 1:
            out.append(f"d must be a positive integer (got {self.d})")
        if not 0.0 < self.hbar <= 1.0:
            out.append(f"0 < hbar <= 1 violated (hbar={self.hbar})")
        if not self.kappa > 0.0:
            out.append(f"kappa > 0 violated (kappa={self.kappa})")
        if self.gamma < 0.0:
            out.append(f"gamma >= 0 violated (gamma={self.gamma})")
        if self.delta < 0.0:
            out.append(f"delta >= 0 violated (delta={self.delta})")
        if not self.delta < 1.0 - self.gamma:
            out.append(f"delta < 1 - gamma violated (delta={self.delta}, gamma={self.gamma})")
        if not self.delta < self.kappa / 3.0:
            out.append(f"delta < kappa/3 violated (delta={self.delta}, kappa={self.kappa})")
        lo, hi = self.xi_window
        if not lo < hi:
            out.append(f"xi_window must satisfy lo < hi (got {self.xi_window})")
        return out

    @property
    def alpha(self) -> float:
        return min(1.0 - self.delta, self.kappa - 3.0 * self.delta)

    @property
    def resonance_bound(self) -> float:
        """Norm bound hbar**-gamma on resonance lattice generators."""
        return self.hbar ** (-self.gamma)

    def with_hbar(self, hbar: float) -> "SemiclassicalContext":
        return replace(self, hbar=float(hbar))

    def compatible(self, other: "SemiclassicalContext") -> bool:
        return (self.d, self.hbar, self.kappa, self.gamma, self.delta) == (
            other.d, other.hbar, other.kappa, other.gamma, other.delta)

    def fd_step(self) -> float:
        """Finite-difference step used for derivatives without an analytic rule."""
        return max(1e-5, self.hbar ** self.delta * 1e-3)

    def x_grid(self, points: int = X_POINTS) -> np.ndarray:
        axis = 2.0 * np.pi * np.arange(points) / points
        return _tensor_grid(axis, self.d)

    def xi_grid(self, points: int = XI_POINTS, window=None) -> np.ndarray:
        lo, hi = self.xi_window if window is None else window
        return _tensor_grid(np.linspace(lo, hi, points), self.d)


def _tensor_grid(axis: np.ndarray, d: int) -> np.ndarray:
    return np.array(list(itertools.product(axis, repeat=d)), dtype=float).reshape(-1, d)


def default_context(hbar: float = 2.0 ** -6, d: int = 2) -> SemiclassicalContext:
    """Preset d=2, kappa=2, delta=0.3, gamma=0.05."""
    return SemiclassicalContext(d=d, hbar=hbar, kappa=2.0, gamma=0.05, delta=0.3)


class EnumerationCapError(RuntimeError):
    """Raised when a lattice enumeration would exceed its configured cap."""


class NotSelfAdjointError(ValueError):
    """Raised when an operation requires a self-adjoint symbol or matrix."""
