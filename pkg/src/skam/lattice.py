"""Integer sub-lattices of Z^d: Hermite normal form, membership and enumeration."""

from __future__ import annotations

import itertools
import math

import numpy as np

from .context import EnumerationCapError

#: default cap on the number of candidate bases examined by an enumeration
ENUMERATION_CAP = 200_000
#: relative slack on norm bounds so that |k| = bound exactly is admitted
NORM_RTOL = 1e-9


def hermite_normal_form(rows) -> list[list[int]]:
    """Row-style Hermite normal form of an integer matrix.

    Zero rows are dropped. Pivots are positive and entries above a pivot are
    reduced into ``[0, pivot)``. Two generating sets of the same lattice give
    identical output.
    """
    A = [[int(v) for v in r] for r in rows]
    if not A:
        return []
    m, ncols = len(A), len(A[0])
    r = 0
    for c in range(ncols):
        if r == m:
            break
        # Euclid on column c among rows r..m-1
        while True:
            nz = [i for i in range(r, m) if A[i][c] != 0]
            if not nz:
                break
            p = min(nz, key=lambda i: abs(A[i][c]))
            A[r], A[p] = A[p], A[r]
            done = True
            for i in range(r + 1, m):
                if A[i][c]:
                    q = A[i][c] // A[r][c]
                    A[i] = [a - q * b for a, b in zip(A[i], A[r])]
                    if A[i][c]:
                        done = False
            if done:
                break
        if A[r][c] == 0:
            continue
        if A[r][c] < 0:
            A[r] = [-a for a in A[r]]
        for i in range(r):
            q = A[i][c] // A[r][c]
            if q:
                A[i] = [a - q * b for a, b in zip(A[i], A[r])]
        r += 1
    return [row for row in A[:r] if any(row)]


def _det_int(M) -> int:
    """Exact determinant of a small square integer matrix (Bareiss)."""
    A = [list(map(int, r)) for r in M]
    n = len(A)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for i in range(k + 1, n):
                if A[i][k]:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[-1][-1]


def saturation_index(basis) -> int:
    """Index of the lattice in span(basis) intersected with Z^d (gcd of maximal minors)."""
    B = [list(r) for r in basis]
    n = len(B)
    if n == 0:
        return 1
    d = len(B[0])
    g = 0
    for cols in itertools.combinations(range(d), n):
        g = math.gcd(g, _det_int([[row[c] for c in cols] for row in B]))
    return g


def lll_reduce(basis, delta: float = 0.99) -> np.ndarray:
    """LLL-reduced basis of a small integer lattice (float Gram-Schmidt)."""
    B = np.array(basis, dtype=float)
    n = B.shape[0]
    if n <= 1:
        return B

    def gso(B):
        Q = np.zeros_like(B)
        mu = np.zeros((n, n))
        for i in range(n):
            Q[i] = B[i]
            for j in range(i):
                mu[i, j] = B[i] @ Q[j] / (Q[j] @ Q[j])
                Q[i] = Q[i] - mu[i, j] * Q[j]
        return Q, mu

    Q, mu = gso(B)
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                B[k] = B[k] - q * B[j]
                Q, mu = gso(B)
        if Q[k] @ Q[k] >= (delta - mu[k, k - 1] ** 2) * (Q[k - 1] @ Q[k - 1]):
            k += 1
        else:
            B[[k, k - 1]] = B[[k - 1, k]]
            Q, mu = gso(B)
            k = max(k - 1, 1)
    return B


class ResonanceLattice:
    """A rank-n sub-lattice of Z^d stored by its Hermite normal form.

    Parameters
    ----------
    basis : array_like
        n x d integer generators (any basis or generating set).
    d : int, optional
        Ambient dimension, required when ``basis`` is empty.
    max_basis_norm : float, optional
        Largest basis-vector norm of a known short basis. When omitted it is
        computed from a reduced basis.
    """

    def __init__(self, basis, d: int | None = None, max_basis_norm: float | None = None):
        arr = np.asarray(basis, dtype=np.int64)
        rows = np.atleast_2d(arr).tolist() if arr.size else []
        if d is None:
            if not rows:
                raise ValueError("ambient dimension needed for the trivial lattice")
            d = len(rows[0])
        if rows and len(rows[0]) != d:
            raise ValueError(f"generators do not have dimension {d}")
        self.d = int(d)
        hnf = hermite_normal_form(rows)
        self.basis = np.array(hnf, dtype=np.int64).reshape(len(hnf), self.d)
        self.n = len(hnf)
        if self.n:
            B = self.basis.astype(float)
            self.covolume = float(math.sqrt(abs(np.linalg.det(B @ B.T))))
            q, _ = np.linalg.qr(B.T)
            self.frame = q.T.copy()
        else:
            self.covolume = 1.0
            self.frame = np.zeros((0, self.d))
        if max_basis_norm is None:
            max_basis_norm = self._reduced_norm()
        self.max_basis_norm = float(max_basis_norm)

    @classmethod
    def trivial(cls, d: int) -> "ResonanceLattice":
        return cls([], d=d, max_basis_norm=0.0)

    @classmethod
    def full(cls, d: int) -> "ResonanceLattice":
        return cls(np.eye(d, dtype=int), max_basis_norm=1.0)

    def _reduced_norm(self) -> float:
        if self.n == 0:
            return 0.0
        red = lll_reduce(self.basis)
        return float(np.max(np.linalg.norm(red, axis=1)))

    @property
    def key(self) -> tuple:
        return (self.d, tuple(map(tuple, self.basis.tolist())))

    def __eq__(self, other):
        return isinstance(other, ResonanceLattice) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"ResonanceLattice({self.basis.tolist()}, d={self.d})"

    @property
    def is_saturated(self) -> bool:
        return saturation_index(self.basis.tolist()) == 1

    def contains(self, k) -> bool:
        """Integer membership test by echelon reduction against the HNF."""
        v = [int(c) for c in k]
        if len(v) != self.d:
            raise ValueError("dimension mismatch")
        for row in self.basis.tolist():
            c = next(i for i, a in enumerate(row) if a)
            if v[c] % row[c]:
                return False
            q = v[c] // row[c]
            if q:
                v = [a - q * b for a, b in zip(v, row)]
        return not any(v)

    def projection_norm(self, vectors) -> np.ndarray:
        """Euclidean norm of the orthogonal projection of each row onto span(R)."""
        vectors = np.atleast_2d(vectors)
        if self.n == 0:
            return np.zeros(vectors.shape[0])
        return np.linalg.norm(vectors @ self.frame.T, axis=1)

    def to_list(self) -> list:
        return self.basis.tolist()


def _norm_ok(v, bound: float) -> bool:
    return sum(c * c for c in v) <= bound * bound * (1.0 + NORM_RTOL)


def bounded_vectors(d: int, bound: float, primitive: bool = False) -> list[tuple]:
    """Nonzero integer vectors with |v| <= bound, one per sign pair (first nonzero entry positive)."""
    r = int(math.floor(bound * (1.0 + NORM_RTOL)))
    out = []
    for v in itertools.product(range(-r, r + 1), repeat=d):
        if not any(v) or not _norm_ok(v, bound):
            continue
        first = next(c for c in v if c)
        if first < 0:
            continue
        if primitive and math.gcd(*v) != 1:
            continue
        out.append(v)
    out.sort(key=lambda v: (sum(c * c for c in v), v))
    return out


def enumerate_lattices(n: int, bound: float, d: int, cap: int = ENUMERATION_CAP,
                       saturated: bool = True) -> list[ResonanceLattice]:
    """All rank-n sub-lattices of Z^d admitting a basis with every |e_j| <= bound.

    With ``saturated=True`` (the default) only lattices equal to their real
    span intersected with Z^d are kept; for n = 1 these are the primitive
    vectors up to sign. Each lattice is reported once, in canonical form,
    with ``max_basis_norm`` the smallest value seen over the bases examined.
    """
    if not 1 <= n <= d:
        raise ValueError(f"need 1 <= n <= d (n={n}, d={d})")
    if bound < 1.0:
        raise ValueError(f"bound must be at least 1 (got {bound})")
    vecs = bounded_vectors(d, bound, primitive=(n == 1 and saturated))
    if n == 1:
        if len(vecs) > cap:
            raise EnumerationCapError(f"{len(vecs)} candidate vectors exceed the cap {cap}")
        return [ResonanceLattice([v], max_basis_norm=math.sqrt(sum(c * c for c in v))) for v in vecs]
    total = math.comb(len(vecs), n)
    if total > cap:
        raise EnumerationCapError(f"{total} candidate bases exceed the cap {cap}")
    found: dict = {}
    for combo in itertools.combinations(vecs, n):
        B = np.array(combo, dtype=float)
        if np.linalg.matrix_rank(B) < n:
            continue
        if saturated and saturation_index(combo) != 1:
            continue
        norm = max(math.sqrt(sum(c * c for c in v)) for v in combo)
        key = tuple(map(tuple, hermite_normal_form(combo)))
        if key not in found or norm < found[key][1]:
            found[key] = (combo, norm)
    return [ResonanceLattice(c, max_basis_norm=nrm) for c, nrm in sorted(found.values(), key=lambda t: (t[1], t[0]))]
