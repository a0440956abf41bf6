"""Resonance zones and blocks, the geometric lemma, and zone volumes.

All norms are Euclidean, so the supremum of |Omega_X(xi)| / |X| over the real
span of a lattice equals the norm of the orthogonal projection of grad H(xi)
onto that span.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .context import ParameterError, SemiclassicalContext
from .fitting import SlopeFit, fit_slope
from .lattice import NORM_RTOL, ENUMERATION_CAP, ResonanceLattice, bounded_vectors, enumerate_lattices


def omega(H, k, xi):
    """Omega_k(xi) = <grad H(xi), k>; a float for a single point."""
    xi = np.asarray(xi, dtype=float)
    vals = H.omega(k, np.atleast_2d(xi))
    return float(vals[0]) if xi.ndim == 1 else vals


def zone_threshold(n: int, covolume: float, ctx: SemiclassicalContext) -> float:
    """2^n hbar^(delta - gamma n) / vol(R)."""
    return 2.0 ** n * ctx.hbar ** (ctx.delta - ctx.gamma * n) / covolume


@functools.lru_cache(maxsize=256)
def _lattices(d: int, n: int, bound: float, cap: int) -> tuple:
    return tuple(enumerate_lattices(n, bound, d, cap=cap))


def resonance_lattices(n: int, ctx: SemiclassicalContext, cap: int = ENUMERATION_CAP) -> tuple:
    """All saturated resonance hbar^-gamma lattices of dimension n."""
    if n == 0:
        return (ResonanceLattice.trivial(ctx.d),)
    return _lattices(ctx.d, n, float(ctx.resonance_bound), cap)


def zone_mask(xi, R: ResonanceLattice, H, ctx: SemiclassicalContext) -> np.ndarray:
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    if R.n == 0:
        return np.ones(xi.shape[0], dtype=bool)
    proj = R.projection_norm(H.gradient(xi))
    return proj < zone_threshold(R.n, R.covolume, ctx)


def in_zone(xi, R: ResonanceLattice, H, ctx: SemiclassicalContext) -> bool:
    """xi in Z_R; the trivial lattice gives the whole space."""
    return bool(zone_mask(xi, R, H, ctx)[0])


def zone_star_mask(xi, n: int, H, ctx: SemiclassicalContext, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """Vectorized membership in Z_n^*, the union of all n-dimensional zones."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    if not 0 <= n <= ctx.d + 1:
        raise ValueError(f"resonance order must lie in [0, d+1] (got {n})")
    if n == 0:
        return np.ones(xi.shape[0], dtype=bool)
    if n == ctx.d + 1:
        return np.zeros(xi.shape[0], dtype=bool)
    lats = resonance_lattices(n, ctx, cap)
    if not lats:
        return np.zeros(xi.shape[0], dtype=bool)
    frames = np.stack([R.frame for R in lats])
    thr = np.array([zone_threshold(n, R.covolume, ctx) for R in lats])
    return kernels.zone_any(H.gradient(xi), frames, thr)


def in_zone_star(xi, n: int, H, ctx: SemiclassicalContext) -> bool:
    return bool(zone_star_mask(xi, n, H, ctx)[0])


def block_mask(xi, R: ResonanceLattice, H, ctx: SemiclassicalContext) -> np.ndarray:
    return zone_mask(xi, R, H, ctx) & ~zone_star_mask(xi, R.n + 1, H, ctx)


def in_block(xi, R: ResonanceLattice, H, ctx: SemiclassicalContext) -> bool:
    """xi in B_R = Z_R minus Z_{n+1}^*; for trivial R this is B_0."""
    return bool(block_mask(xi, R, H, ctx)[0])


def block_star_mask(xi, n: int, H, ctx: SemiclassicalContext) -> np.ndarray:
    """Membership in B_n^* = Z_n^* minus Z_{n+1}^*."""
    return zone_star_mask(xi, n, H, ctx) & ~zone_star_mask(xi, n + 1, H, ctx)


def block_dimensions(xi, H, ctx: SemiclassicalContext) -> np.ndarray:
    """Boolean table (N, d+1): entry (i, n) says xi_i lies in B_n^*."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    zs = [zone_star_mask(xi, n, H, ctx) for n in range(ctx.d + 2)]
    return np.stack([zs[n] & ~zs[n + 1] for n in range(ctx.d + 1)], axis=1)


def blocks_containing(xi, H, ctx: SemiclassicalContext) -> list[ResonanceLattice]:
    """Every resonance lattice (trivial one included) whose block contains xi."""
    out = []
    for n in range(ctx.d + 1):
        for R in resonance_lattices(n, ctx):
            if in_block(xi, R, H, ctx):
                out.append(R)
    return out


# -------------------------------------------------------------- lemma


@dataclass
class GeometricLemmaReport:
    """Result of scanning |Omega_k(xi)| / |k| >= hbar^delta over k outside R."""

    xi: np.ndarray
    lattice: ResonanceLattice
    in_block: bool
    scanned: int
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_geometric_lemma(xi, R: ResonanceLattice, H, ctx: SemiclassicalContext) -> GeometricLemmaReport:
    """Report every k not in R with |k| <= hbar^-gamma and |Omega_k(xi)| / |k| < hbar^delta.

    The scan covers one vector per sign pair, since the ratio is even in k.
    """
    xi = np.asarray(xi, dtype=float).reshape(-1)
    ks = [k for k in bounded_vectors(ctx.d, ctx.resonance_bound) if not R.contains(k)]
    report = GeometricLemmaReport(xi, R, in_block(xi, R, H, ctx), len(ks))
    if not ks:
        return report
    K = np.array(ks, dtype=float)
    ratio = np.abs(K @ H.gradient(xi)[0]) / np.linalg.norm(K, axis=1)
    bad = ratio < ctx.hbar ** ctx.delta
    report.violations = [(ks[i], float(ratio[i])) for i in np.flatnonzero(bad)]
    return report


def resonance_point(H, R: ResonanceLattice, xi0, tol: float = 1e-12, max_iter: int = 50) -> np.ndarray:
    """A point of Sigma_R near ``xi0`` by Newton steps on Omega_{e_j}(xi) = 0.

    Uses the minimum-norm correction, which is exact in one step for
    quadratic Hamiltonians.
    """
    xi = np.asarray(xi0, dtype=float).copy()
    E = R.basis.astype(float)
    for _ in range(max_iter):
        F = E @ H.gradient(xi)[0]
        if np.max(np.abs(F), initial=0.0) < tol:
            break
        J = E @ H.hessian(xi)[0]
        xi = xi - np.linalg.lstsq(J, F, rcond=None)[0]
    return xi


#: smallest |d(Omega_k)| on Sigma_k accepted as non-degenerate
NONDEGENERACY_TOL = 1e-8


def nondegeneracy_margin(H, ctx: SemiclassicalContext, samples: int = 16, seed: int = 0) -> float:
    """min |d(Omega_k)| over points of Sigma_k, for every primitive |k| <= hbar^-gamma.

    The points are Newton projections of uniform draws from the xi window.
    """
    rng = np.random.default_rng(seed)
    lo, hi = ctx.xi_window
    starts = rng.uniform(lo, hi, size=(samples, ctx.d))
    worst = np.inf
    for R in resonance_lattices(1, ctx):
        k = R.basis[0].astype(float)
        pts = np.array([resonance_point(H, R, x) for x in starts])
        worst = min(worst, float(np.min(np.linalg.norm(H.hessian(pts) @ k, axis=1))))
    return worst


def require_nondegenerate(H, ctx: SemiclassicalContext, tol: float = NONDEGENERACY_TOL) -> float:
    margin = nondegeneracy_margin(H, ctx)
    if not margin > tol:
        raise ParameterError(f"Hamiltonian is degenerate: min |d(Omega_k)| on Sigma_k is {margin:.3e} <= {tol:g}")
    return margin


# ---------------------------------------------------------- windows


class Box:
    kind = "box"

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.d = self.lo.size

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def sample(self, rng, n):
        return self.lo + (self.hi - self.lo) * rng.random((n, self.d))

    def x_range(self):
        return float(self.lo[0]), float(self.hi[0])

    def sections(self, x):
        """Pieces of the cross-section {xi_2 : (x, xi_2) in window} for d = 2."""
        inside = (x >= self.lo[0]) & (x <= self.hi[0])
        lo = np.where(inside, self.lo[1], 0.0)
        hi = np.where(inside, self.hi[1], 0.0)
        return [(lo, hi)]

    def to_dict(self):
        return {"kind": self.kind, "lo": self.lo.tolist(), "hi": self.hi.tolist()}


class Annulus:
    """{r_in <= |xi - center| <= r_out}; r_in = 0 gives a ball."""

    kind = "annulus"

    def __init__(self, center, r_out, r_in=0.0):
        self.center = np.asarray(center, dtype=float)
        self.r_in = float(r_in)
        self.r_out = float(r_out)
        self.d = self.center.size
        if not 0.0 <= self.r_in < self.r_out:
            raise ValueError("need 0 <= r_in < r_out")

    @property
    def volume(self) -> float:
        unit = math.pi ** (self.d / 2) / math.gamma(self.d / 2 + 1)
        return unit * (self.r_out ** self.d - self.r_in ** self.d)

    def sample(self, rng, n):
        g = rng.standard_normal((n, self.d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        u = rng.random(n)
        r = (self.r_in ** self.d + u * (self.r_out ** self.d - self.r_in ** self.d)) ** (1.0 / self.d)
        return self.center + g * r[:, None]

    def x_range(self):
        return float(self.center[0] - self.r_out), float(self.center[0] + self.r_out)

    def sections(self, x):
        dx = x - self.center[0]
        c = self.center[1]
        ho = np.sqrt(np.maximum(self.r_out ** 2 - dx ** 2, 0.0))
        hi_ = np.sqrt(np.maximum(self.r_in ** 2 - dx ** 2, 0.0))
        return [(c - ho, c - hi_), (c + hi_, c + ho)]

    def to_dict(self):
        return {"kind": self.kind, "center": self.center.tolist(), "r_in": self.r_in, "r_out": self.r_out}


def Ball(center, radius):
    return Annulus(center, radius, 0.0)


def window_from_dict(spec: dict):
    kind = spec["kind"]
    if kind == "box":
        return Box(spec["lo"], spec["hi"])
    if kind == "ball":
        return Ball(spec["center"], spec["radius"])
    if kind == "annulus":
        return Annulus(spec["center"], spec["r_out"], spec.get("r_in", 0.0))
    raise ValueError(f"unknown window kind {kind!r}")


# ----------------------------------------------------------- volumes


def wilson_interval(hits: int, samples: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if samples <= 0:
        raise ValueError("samples must be positive")
    p = hits / samples
    den = 1.0 + z * z / samples
    mid = (p + z * z / (2 * samples)) / den
    half = z * math.sqrt(p * (1 - p) / samples + z * z / (4 * samples * samples)) / den
    lo = 0.0 if hits == 0 else max(0.0, mid - half)
    hi = 1.0 if hits == samples else min(1.0, mid + half)
    return lo, hi


@dataclass(frozen=True)
class ZoneVolumeEstimate:
    n: int
    quantity: str
    window: dict
    hbar: float
    gamma: float
    delta: float
    samples: int
    hits: int
    seed: int

    @property
    def estimate(self) -> float:
        return self.hits / self.samples

    @property
    def ci95(self) -> tuple[float, float]:
        return wilson_interval(self.hits, self.samples)

    def row(self) -> dict:
        lo, hi = self.ci95
        return {"hbar": self.hbar, "n": self.n, "samples": self.samples, "hits": self.hits,
                "estimate": self.estimate, "ci_lo": lo, "ci_hi": hi, "seed": self.seed}


@dataclass
class VolumeStudy:
    estimates: list
    fit: SlopeFit | None
    lower_bound_only: bool

    @property
    def exponent(self) -> float | None:
        return None if self.fit is None else self.fit.slope


def membership(xi, n: int, quantity: str, H, ctx) -> np.ndarray:
    if quantity == "zone":
        return zone_star_mask(xi, n, H, ctx)
    if quantity == "block":
        return block_star_mask(xi, n, H, ctx)
    raise ValueError(f"quantity must be 'zone' or 'block' (got {quantity!r})")


def count_hits(n, quantity, window, H, ctx, samples, seed_seq, chunk=1 << 18) -> int:
    """Hits among ``samples`` uniform draws from ``window`` with the given seed sequence."""
    rng = np.random.default_rng(seed_seq)
    hits = 0
    left = samples
    while left > 0:
        m = min(chunk, left)
        hits += int(np.count_nonzero(membership(window.sample(rng, m), n, quantity, H, ctx)))
        left -= m
    return hits


def mc_volume(n: int, window, hbars, samples: int, seed: int, H, ctx: SemiclassicalContext,
              quantity: str = "zone", require_hypothesis: bool = True) -> VolumeStudy:
    """Monte Carlo relative volume of Z_n^* (or B_n^*) inside ``window`` over an hbar sweep.

    Each hbar uses its own substream ``SeedSequence(seed).spawn(len(hbars))[i]``.
    The exponent is the log-log slope of the estimates; if the smallest hbar has
    no hits the fit uses the remaining points and is flagged as a lower bound.
    """
    if samples <= 0:
        raise ValueError("samples must be positive")
    if require_hypothesis and not ctx.delta > 2 * ctx.d * ctx.gamma:
        raise ParameterError(f"delta > 2 d gamma violated (delta={ctx.delta}, d={ctx.d}, gamma={ctx.gamma})")
    hbars = list(hbars)
    streams = np.random.SeedSequence(seed).spawn(len(hbars))
    ests = []
    for h, ss in zip(hbars, streams):
        c = ctx.with_hbar(h)
        hits = count_hits(n, quantity, window, H, c, samples, ss)
        ests.append(ZoneVolumeEstimate(n, quantity, window.to_dict(), h, ctx.gamma, ctx.delta, samples, hits, seed))
    return summarize_volumes(ests)


def summarize_volumes(ests) -> VolumeStudy:
    ests = sorted(ests, key=lambda e: -e.hbar)
    vals = [e.estimate for e in ests]
    lower = vals[-1] == 0
    try:
        fit = fit_slope([e.hbar for e in ests], vals)
    except ValueError:
        fit = None
    return VolumeStudy(ests, fit, lower)


def slab_union_volume(window, H, ctx: SemiclassicalContext, grid: int = 20001) -> float:
    """Relative volume of Z_1^* in a planar window by exact interval unions.

    For a quadratic H each Omega_k is affine, so every one-dimensional zone is a
    slab. Each vertical line xi_1 = x meets the slabs in intervals whose union
    length is integrated over x with the midpoint rule.
    """
    if ctx.d != 2:
        raise ValueError("slab-union volumes are implemented for d = 2")
    if H.kind not in ("quadratic", "linear"):
        raise ValueError("slab-union volumes need an affine frequency map")
    lats = resonance_lattices(1, ctx)
    x0, x1 = window.x_range()
    dx = (x1 - x0) / grid
    x = x0 + dx * (np.arange(grid) + 0.5)
    # Omega_k(xi) = a_k . xi + c_k
    rows_a, rows_c, rows_t = [], [], []
    origin = np.zeros((1, 2))
    for R in lats:
        k = R.basis[0].astype(float)
        c = float(H.gradient(origin)[0] @ k)
        a = np.array([float(H.gradient(np.eye(2)[[i]])[0] @ k) - c for i in range(2)])
        rows_a.append(a)
        rows_c.append(c)
        rows_t.append(zone_threshold(1, R.covolume, ctx) * R.covolume)
    A = np.array(rows_a)
    C = np.array(rows_c)
    T = np.array(rows_t)
    total = np.zeros(grid)
    for lo_sec, hi_sec in window.sections(x):
        starts = np.empty((grid, len(lats)))
        ends = np.empty((grid, len(lats)))
        for j in range(len(lats)):
            a1, a2 = A[j]
            base = a1 * x + C[j]
            if abs(a2) > 0:
                s = (-T[j] - base) / a2
                e = (T[j] - base) / a2
                s, e = np.minimum(s, e), np.maximum(s, e)
            else:
                hit = np.abs(base) < T[j]
                s = np.where(hit, -np.inf, 0.0)
                e = np.where(hit, np.inf, 0.0)
            starts[:, j] = np.maximum(s, lo_sec)
            ends[:, j] = np.minimum(e, hi_sec)
        total += kernels.interval_union_length(starts, ends)
    return float(total.sum() * dx / window.volume)


__all__ = [
    "NORM_RTOL", "omega", "zone_threshold", "resonance_lattices", "zone_mask", "in_zone",
    "zone_star_mask", "in_zone_star", "block_mask", "in_block", "block_star_mask",
    "block_dimensions", "blocks_containing", "GeometricLemmaReport", "check_geometric_lemma",
    "resonance_point", "nondegeneracy_margin", "require_nondegenerate", "Box", "Annulus", "Ball", "window_from_dict", "wilson_interval",
    "ZoneVolumeEstimate", "VolumeStudy", "membership", "count_hits", "mc_volume",
    "summarize_volumes", "slab_union_volume",
]
