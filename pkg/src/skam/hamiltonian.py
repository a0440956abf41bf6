"""Completely integrable Hamiltonians H(xi) and their frequency pairings Omega_k."""

from __future__ import annotations

import numpy as np

from . import fields as F
from .symbols import FourierSymbol


class Hamiltonian:
    """An x-independent symbol H(xi) with analytic gradient and Hessian.

    Parameters
    ----------
    field : Field
        The function H(xi).
    kind : str
        Name of the built-in family, used for serialization.
    params : dict
        Parameters of the family (lists of floats).
    """

    def __init__(self, field: F.Field, d: int, kind: str = "custom", params=None):
        self.field = field
        self.d = int(d)
        self.kind = kind
        self.params = dict(params or {})
        self._grad = tuple(field.deriv(i) for i in range(self.d))
        self._omega_cache: dict = {}

    def __call__(self, xi) -> np.ndarray:
        return F.Evaluator(np.atleast_2d(xi))(self.field).real

    def gradient_fields(self) -> tuple:
        return self._grad

    def gradient(self, xi) -> np.ndarray:
        """grad H at points ``xi`` (n, d) as an (n, d) real array."""
        ev = F.Evaluator(np.atleast_2d(xi))
        return np.stack([ev(g).real for g in self._grad], axis=1)

    def hessian(self, xi) -> np.ndarray:
        ev = F.Evaluator(np.atleast_2d(xi))
        out = np.empty((ev.n, self.d, self.d))
        for i, g in enumerate(self._grad):
            for j in range(self.d):
                out[:, i, j] = ev(g.deriv(j)).real
        return out

    def omega_field(self, k) -> F.Field:
        """Omega_k(xi) = <grad H(xi), k> as a coefficient field."""
        key = tuple(int(c) for c in k)
        f = self._omega_cache.get(key)
        if f is None:
            f = F.add(*(F.scale(c, g) for c, g in zip(key, self._grad)))
            self._omega_cache[key] = f
        return f

    def omega(self, k, xi) -> np.ndarray:
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        return self.gradient(xi) @ np.asarray(k, dtype=float)

    def symbol(self, ctx) -> FourierSymbol:
        if ctx.d != self.d:
            raise ValueError(f"Hamiltonian has dimension {self.d}, context {ctx.d}")
        return FourierSymbol.from_xi(ctx, self.field)

    def nondegeneracy_margin(self, ks, xi) -> float:
        """min |d(Omega_k)_xi| over the given modes and sample points."""
        hess = self.hessian(xi)
        worst = np.inf
        for k in ks:
            g = hess @ np.asarray(k, dtype=float)
            worst = min(worst, float(np.min(np.linalg.norm(g, axis=1))))
        return worst

    def to_dict(self) -> dict:
        return {"kind": self.kind, "d": self.d, **self.params}

    def __repr__(self):
        return f"Hamiltonian({self.kind}, d={self.d}, {self.params})"


def quadratic(M, b=None) -> Hamiltonian:
    """H(xi) = 1/2 <xi, M xi> + <b, xi> with symmetric invertible M."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    d = M.shape[0]
    if M.shape != (d, d) or not np.allclose(M, M.T):
        raise ValueError("M must be a symmetric square matrix")
    if abs(np.linalg.det(M)) < 1e-12:
        raise ValueError("M must be invertible")
    b = np.zeros(d) if b is None else np.asarray(b, dtype=float).reshape(d)
    field = F.Poly(0.0, b, M)
    return Hamiltonian(field, d, "quadratic", {"M": M.tolist(), "b": b.tolist()})


def free(d: int, scale: float = 0.5) -> Hamiltonian:
    """H(xi) = scale * |xi|^2; ``scale=0.5`` gives |xi|^2/2 and ``scale=1`` gives xi^2."""
    return quadratic(2.0 * scale * np.eye(d))


def linear(omega) -> Hamiltonian:
    """Degenerate H(xi) = <omega, xi> (constant frequencies)."""
    omega = np.asarray(omega, dtype=float).reshape(-1)
    field = F.Poly(0.0, omega)
    return Hamiltonian(field, omega.size, "linear", {"omega": omega.tolist()})


def from_dict(spec: dict) -> Hamiltonian:
    kind = spec.get("kind", "quadratic")
    if kind == "quadratic":
        return quadratic(spec["M"], spec.get("b"))
    if kind == "free":
        return free(int(spec["d"]), float(spec.get("scale", 0.5)))
    if kind == "linear":
        return linear(spec["omega"])
    raise ValueError(f"unknown Hamiltonian kind {kind!r}")
