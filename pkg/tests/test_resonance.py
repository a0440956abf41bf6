import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skam.context import ParameterError, SemiclassicalContext
from skam.hamiltonian import free, quadratic
from skam.lattice import ResonanceLattice
from skam.resonance import (Annulus, Box, block_dimensions, blocks_containing, check_geometric_lemma, in_block,
                            in_zone, in_zone_star, mc_volume, omega, resonance_lattices, resonance_point,
                            slab_union_volume, wilson_interval, zone_mask, zone_star_mask)

H0 = free(2)
HQ = quadratic([[1.0, 0.2], [0.2, 0.7]], [0.05, -0.1])
e1 = ResonanceLattice([[1, 0]], d=2)


def ctx_at(hbar, **kw):
    return SemiclassicalContext(d=2, hbar=hbar, **kw)


def test_omega_examples():
    assert omega(H0, (1, 0), [0.3, 0.5]) == pytest.approx(0.3)
    assert omega(H0, (1, 1), [0.3, 0.5]) == pytest.approx(0.8)
    xi = np.random.default_rng(0).normal(size=(10, 2))
    h = 1e-6
    for k in [(1, 0), (2, -1)]:
        kv = np.array(k, float)
        fd = (HQ(xi + h * kv) - HQ(xi - h * kv)) / (2 * h)
        assert np.allclose(omega(HQ, k, xi), fd, atol=1e-7)


def test_in_zone_examples():
    ctx = ctx_at(2.0 ** -8)
    assert in_zone([0.0, 1.0], e1, H0, ctx)
    assert not in_zone([1.0, 0.0], e1, H0, ctx)
    assert in_zone([1.0, 0.0], ResonanceLattice.trivial(2), H0, ctx)


def test_in_zone_star_examples():
    ctx = ctx_at(2.0 ** -12)
    assert [tuple(R.basis[0]) for R in resonance_lattices(1, ctx)] == [(0, 1), (1, 0), (1, -1), (1, 1)] or \
        len(resonance_lattices(1, ctx)) == 4
    assert not in_zone_star([0.5, 0.5 * math.sqrt(3)], 1, H0, ctx)
    assert in_zone_star([0.0, 1.3], 1, H0, ctx)
    assert in_zone_star([0.7, 0.7], 1, H0, ctx)
    assert in_zone_star([0.0, 0.0], 2, H0, ctx)
    assert not in_zone_star([0.0, 0.0], 3, H0, ctx)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=2), st.sampled_from([(1, 0), (1, 1), (2, -1), (1, 2)]))
def test_one_dimensional_zone_reduces_to_frequency_test(xi, k):
    ctx = ctx_at(2.0 ** -10)
    R = ResonanceLattice([k], d=2)
    w = abs(omega(HQ, k, xi))
    thr = 2 * ctx.hbar ** (ctx.delta - ctx.gamma)
    if abs(w - thr) > 1e-12:
        assert in_zone(xi, R, HQ, ctx) == (w < thr)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=2), st.floats(0.05, 0.3), st.floats(0.0, 0.2))
def test_zones_shrink_as_delta_grows(xi, d1, extra):
    h = 2.0 ** -8
    small = ctx_at(h, delta=d1)
    large = ctx_at(h, delta=min(d1 + extra, 0.6))
    for R in resonance_lattices(1, small):
        if in_zone(xi, R, HQ, large):
            assert in_zone(xi, R, HQ, small)


def test_projection_agrees_with_direction_scan():
    """sup over X in span(R) of |Omega_X| / |X| equals the projection norm."""
    rng = np.random.default_rng(4)
    R = ResonanceLattice([[1, 0, 1], [0, 1, -1]])
    H = quadratic(np.diag([1.0, 0.8, 1.3]), [0.1, 0.2, -0.3])
    xi = rng.normal(size=(5, 3))
    g = H.gradient(xi)
    coeffs = rng.normal(size=(20000, 2))
    X = coeffs @ R.basis.astype(float)
    scan = np.max(np.abs(g @ X.T) / np.linalg.norm(X, axis=1), axis=1)
    proj = R.projection_norm(g)
    assert np.all(scan <= proj + 1e-12)
    assert np.allclose(scan, proj, rtol=1e-3)


@pytest.mark.parametrize("rows", [[[1, 0]], [[1, 1]], [[2, -1]]])
def test_resonance_set_lies_in_every_zone(rows):
    R = ResonanceLattice(rows, d=2)
    xi = resonance_point(HQ, R, [0.7, -0.4])
    for k in R.basis:
        assert abs(omega(HQ, tuple(k), xi)) < 1e-12
    for j in range(2, 16, 3):
        assert in_zone(xi, R, HQ, ctx_at(2.0 ** -j))


def test_blocks_cover_phase_space():
    rng = np.random.default_rng(1)
    xi = rng.uniform(-2, 2, size=(4000, 2))
    for j in (4, 8):
        table = block_dimensions(xi, HQ, ctx_at(2.0 ** -j))
        assert np.all(table.sum(axis=1) >= 1)
    assert blocks_containing([1.0, 0.37], H0, ctx_at(2.0 ** -16)) == [ResonanceLattice.trivial(2)]


@pytest.mark.parametrize("j", [4, 6, 8])
def test_geometric_lemma_on_sampled_blocks(j):
    ctx = ctx_at(2.0 ** -j)
    rng = np.random.default_rng(j)
    xi = rng.uniform(-2, 2, size=(600, 2))
    checked = 0
    for R in (ResonanceLattice.trivial(2),) + resonance_lattices(1, ctx):
        for p in xi[np.flatnonzero((zone_mask(xi, R, HQ, ctx)) & ~zone_star_mask(xi, R.n + 1, HQ, ctx))][:60]:
            rep = check_geometric_lemma(p, R, HQ, ctx)
            assert rep.in_block and rep.ok, rep.violations
            checked += 1
    assert checked >= 60


def test_geometric_lemma_detects_violation():
    ctx = ctx_at(2.0 ** -8)
    rep = check_geometric_lemma([0.0, 1.0], ResonanceLattice.trivial(2), H0, ctx)
    assert not rep.in_block and not rep.ok
    assert rep.violations[0][0] == (1, 0)


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and hi == pytest.approx(0.0370, abs=1e-4)
    lo, hi = wilson_interval(50, 100)
    assert lo == pytest.approx(0.4038, abs=1e-4) and hi == pytest.approx(0.5962, abs=1e-4)
    with pytest.raises(ValueError):
        wilson_interval(0, 0)


def test_mc_volume_without_gamma_recovers_delta():
    ctx = ctx_at(0.5, gamma=0.0)
    study = mc_volume(1, Box([-4, -4], [4, 4]), [2.0 ** -j for j in range(8, 15)], 200_000, 3, H0, ctx)
    assert study.exponent == pytest.approx(ctx.delta, abs=0.03)


def test_mc_volume_determinism_and_errors():
    ctx = ctx_at(0.5)
    win = Annulus([0, 0], 2.0, 1.0)
    a = mc_volume(1, win, [2.0 ** -6, 2.0 ** -8], 20_000, 11, HQ, ctx)
    b = mc_volume(1, win, [2.0 ** -6, 2.0 ** -8], 20_000, 11, HQ, ctx)
    assert [e.hits for e in a.estimates] == [e.hits for e in b.estimates]
    with pytest.raises(ValueError):
        mc_volume(1, win, [0.1], 0, 1, HQ, ctx)
    bad = SemiclassicalContext(d=2, hbar=0.5, delta=0.15, gamma=0.05)
    with pytest.raises(ParameterError, match="delta > 2 d gamma"):
        mc_volume(1, win, [0.1], 100, 1, HQ, bad)


def test_nonresonant_block_fills_the_window():
    ctx = ctx_at(0.5)
    fr = [1 - e.estimate for e in mc_volume(1, Box([-2, -2], [2, 2]), [2.0 ** -j for j in (4, 8, 12, 16)],
                                            50_000, 5, HQ, ctx).estimates]
    assert all(a < b for a, b in zip(fr, fr[1:]))
    # the complement shrinks only like hbar^(delta - 2 gamma)-ish, so convergence is slow
    assert fr[-1] > 0.7 and fr[-1] - fr[0] > 0.3


def test_slab_union_matches_monte_carlo():
    ctx = ctx_at(2.0 ** -8)
    win = Annulus([0, 0], 8.0, 1.0)
    exact = slab_union_volume(win, H0, ctx)
    mc = mc_volume(1, win, [ctx.hbar], 400_000, 2, H0, ctx).estimates[0]
    lo, hi = mc.ci95
    assert lo - 1e-3 <= exact <= hi + 1e-3


def test_nondegeneracy_gate():
    from skam.hamiltonian import linear
    from skam.resonance import nondegeneracy_margin, require_nondegenerate
    ctx = SemiclassicalContext(d=2, hbar=2.0 ** -6)
    assert nondegeneracy_margin(free(2), ctx) > 0.5
    with pytest.raises(ParameterError):
        require_nondegenerate(linear([1.0, 2.0 ** 0.5]), ctx)
