"""Brute-force spectral oracle: left quantization on a truncated Fourier basis."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import fields as F
from .context import NotSelfAdjointError, ParameterError
from .normal_form import effective_eigenvalue
from .symbols import FourierSymbol, is_selfadjoint

#: default interior margin factor (multiples of the bandwidth)
MARGIN = 2


class OperatorMatrix:
    """Matrix of a symbol on the basis window {k : |k|_inf <= K_basis}.

    Entries are ``M[m, k] = P~(m - k, hbar k)``. Basis vectors are ordered
    lexicographically and the matrix is stored sparse (CSR).
    """

    def __init__(self, ctx, K_basis: int, matrix, bandwidth: int, margin: int = MARGIN):
        self.ctx = ctx
        self.K_basis = int(K_basis)
        self.matrix = matrix.tocsr()
        self.bandwidth = int(bandwidth)
        self.margin = int(margin)
        self.basis = basis_window(ctx.d, K_basis)

    @property
    def size(self) -> int:
        return self.basis.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def index(self, k) -> int:
        return basis_index(k, self.K_basis)

    def interior(self, bandwidth: int | None = None, margin: int | None = None) -> np.ndarray:
        """Indices of basis vectors with |k|_inf <= K_basis - bandwidth * margin."""
        bw = self.bandwidth if bandwidth is None else bandwidth
        mg = self.margin if margin is None else margin
        return interior_indices(self.basis, self.K_basis - bw * mg)

    def hermitian_defect(self) -> float:
        D = self.matrix - self.matrix.conj().T
        return float(abs(D).max()) if D.nnz else 0.0

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return self.matrix @ other.matrix
        return self.matrix @ other


def basis_window(d: int, K_basis: int) -> np.ndarray:
    r = range(-K_basis, K_basis + 1)
    return np.array(list(itertools.product(r, repeat=d)), dtype=np.int64).reshape(-1, d)


def basis_index(k, K_basis: int) -> int:
    L = 2 * K_basis + 1
    idx = 0
    for c in k:
        if abs(int(c)) > K_basis:
            raise IndexError(f"mode {tuple(k)} lies outside the basis window")
        idx = idx * L + int(c) + K_basis
    return idx


def interior_indices(basis: np.ndarray, radius: int) -> np.ndarray:
    return np.flatnonzero(np.max(np.abs(basis), axis=1) <= radius)


def quantize(P: FourierSymbol, K_basis: int, margin: int = MARGIN) -> OperatorMatrix:
    """Left quantization M[m, k] = P~(m - k, hbar k) on the window |k|_inf <= K_basis."""
    bw = P.bandwidth
    if K_basis < bw + 1:
        raise ParameterError(f"K_basis={K_basis} must be at least bandwidth + 1 = {bw + 1}")
    d = P.d
    basis = basis_window(d, K_basis)
    n = basis.shape[0]
    L = 2 * K_basis + 1
    ev = F.Evaluator(P.ctx.hbar * basis.astype(float))
    weights = L ** np.arange(d - 1, -1, -1)
    rows, cols, vals = [], [], []
    for j, f in P.coeffs.items():
        target = basis + np.asarray(j)
        ok = np.all(np.abs(target) <= K_basis, axis=1)
        col = np.flatnonzero(ok)
        row = (target[ok] + K_basis) @ weights
        rows.append(row)
        cols.append(col)
        vals.append(ev(f)[ok])
    if rows:
        M = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n))
    else:
        M = sp.csr_matrix((n, n), dtype=complex)
    return OperatorMatrix(P.ctx, K_basis, M, bw, margin)


def block_difference(X, Y, idx) -> float:
    """max |X - Y| restricted to rows and columns ``idx`` (sparse or dense inputs)."""
    D = X - Y
    if sp.issparse(D):
        D = D.tocsr()[idx][:, idx]
        return float(abs(D).max()) if D.nnz else 0.0
    D = np.asarray(D)[np.ix_(idx, idx)]
    return float(np.max(np.abs(D))) if D.size else 0.0


def _dense(M):
    if isinstance(M, OperatorMatrix):
        return M.dense()
    if sp.issparse(M):
        return M.toarray()
    return np.asarray(M)


def eigensolve(M, tol: float = 1e-10):
    """Ascending spectrum and orthonormal eigenvectors of a Hermitian matrix."""
    A = _dense(M)
    defect = float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0
    if defect > tol:
        raise NotSelfAdjointError(f"matrix is not Hermitian (defect {defect:.3e} > {tol:g})")
    A = 0.5 * (A + A.conj().T)
    return scipy.linalg.eigh(A)


def unitary_exp(P: FourierSymbol, scale: float, K_basis: int, tol: float = 1e-10) -> np.ndarray:
    """exp(i scale quantize(P)) through a Hermitian eigendecomposition."""
    if not is_selfadjoint(P, tol):
        raise NotSelfAdjointError("unitary_exp needs a self-adjoint symbol")
    n = basis_window(P.d, K_basis).shape[0]
    if P.is_zero:
        return np.eye(n, dtype=complex)
    w, V = eigensolve(quantize(P, K_basis), tol)
    U = (V * np.exp(1j * scale * w)) @ V.conj().T
    err = float(np.max(np.abs(U.conj().T @ U - np.eye(n))))
    if err > tol:
        raise ArithmeticError(f"matrix exponential lost unitarity ({err:.3e})")
    return U


@dataclass(frozen=True)
class QuasimodeReport:
    hbar: float
    k: tuple
    E: float
    residual: float
    gap: float
    overlap: float
    nf_order: int

    def row(self) -> dict:
        return {"hbar": self.hbar, "k": " ".join(map(str, self.k)), "E": self.E,
                "residual": self.residual, "gap": self.gap, "overlap": self.overlap,
                "nf_order": self.nf_order}


def build_quasimode(H, K0: FourierSymbol, nf, k, K_basis: int, margin: int | None = None) -> QuasimodeReport:
    """Quasimode phi = U_0^* ... U_{N-1}^* e_k with E from the normal form.

    ``margin`` is the minimal distance between the site and the window
    boundary; it defaults to N * bandwidth(K0) * M.
    """
    ctx = K0.ctx
    k = tuple(int(c) for c in k)
    N = len(nf.steps)
    need = N * max(K0.bandwidth, 1) * nf.M if margin is None else margin
    if max(abs(c) for c in k) > K_basis - need:
        raise ParameterError(f"site {k} lies within {need} of the basis boundary K_basis={K_basis}")
    E = effective_eigenvalue(nf, k)
    n = basis_window(ctx.d, K_basis).shape[0]
    phi = np.zeros(n, dtype=complex)
    phi[basis_index(k, K_basis)] = 1.0
    s = ctx.hbar ** (ctx.kappa - 1.0)
    for step in reversed(nf.steps):
        U = unitary_exp(step.P, s, K_basis)
        phi = U.conj().T @ phi
    phi /= np.linalg.norm(phi)
    Mtot = quantize(H.symbol(ctx), K_basis).matrix + ctx.hbar ** ctx.kappa * quantize(K0, K_basis).matrix
    residual = float(np.linalg.norm(Mtot @ phi - E * phi))
    spectrum = eigensolve(Mtot)[0]
    gap = float(np.min(np.abs(spectrum - E)))
    overlap = float(min(1.0, abs(phi[basis_index(k, K_basis)])))
    if gap > residual + 1e-10:
        raise ArithmeticError(f"gap {gap:.3e} exceeds residual {residual:.3e}")
    return QuasimodeReport(ctx.hbar, k, float(E), residual, gap, overlap, N)


def site_for(xi0, hbar: float) -> tuple:
    """Integer site k with hbar k closest to ``xi0``."""
    return tuple(int(round(c / hbar)) for c in np.atleast_1d(xi0))


__all__ = ["OperatorMatrix", "quantize", "eigensolve", "unitary_exp", "QuasimodeReport",
           "build_quasimode", "block_difference", "basis_window", "basis_index",
           "interior_indices", "site_for"]
