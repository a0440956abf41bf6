import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skam.context import ParameterError, SemiclassicalContext, default_context
from skam.cutoff import chi, phi


def test_alpha_is_derived():
    ctx = SemiclassicalContext(d=1, hbar=0.1, kappa=2.0, delta=0.3, gamma=0.05)
    assert ctx.alpha == pytest.approx(0.7)
    ctx = SemiclassicalContext(d=1, hbar=0.1, kappa=1.0, delta=0.3, gamma=0.05)
    assert ctx.alpha == pytest.approx(0.1)


@pytest.mark.parametrize("kw, text", [
    ({"delta": 0.96, "gamma": 0.05, "kappa": 3.0}, "delta < 1 - gamma"),
    ({"delta": 0.7, "kappa": 2.0}, "delta < kappa/3"),
    ({"hbar": 0.0}, "0 < hbar <= 1"),
    ({"hbar": 1.5}, "0 < hbar <= 1"),
    ({"kappa": -1.0}, "kappa > 0"),
    ({"gamma": -0.1}, "gamma >= 0"),
])
def test_violations_name_the_inequality(kw, text):
    args = {"d": 2, "hbar": 0.1, **kw}
    with pytest.raises(ParameterError, match=text.replace("(", r"\(").replace(")", r"\)")):
        SemiclassicalContext(**args)


def test_default_preset_and_grids():
    ctx = default_context()
    assert (ctx.d, ctx.kappa, ctx.delta, ctx.gamma) == (2, 2.0, 0.3, 0.05)
    assert ctx.delta > 2 * ctx.d * ctx.gamma
    assert ctx.x_grid().shape == (17 ** 2, 2)
    assert ctx.xi_grid().shape == (33 ** 2, 2)
    assert ctx.fd_step() == max(1e-5, ctx.hbar ** ctx.delta * 1e-3)


def test_chi_phi_examples():
    assert chi(0.0) == 1.0 and chi(1.0) == 0.0 and chi(-1.0) == 0.0 and chi(0.25) == 1.0
    assert phi(2.0) == 0.5 and phi(0.0) == 0.0


def test_chi_symmetry_exact():
    t = np.random.default_rng(0).uniform(-2, 2, 1000)
    assert np.array_equal(chi(t), chi(-t))


def test_cutoff_shape_on_fine_grid():
    t = np.linspace(-3, 3, 60001)
    c = chi(t)
    assert np.all((c >= 0) & (c <= 1))
    assert np.all(c[np.abs(t) <= 0.5] == 1.0)
    assert np.all(c[np.abs(t) >= 1.0] == 0.0)
    p = phi(t)
    assert np.max(np.abs(p)) <= 2.0
    out = np.abs(t) >= 1
    assert np.allclose(p[out], 1 / t[out], rtol=0, atol=0)
    # monotone decreasing on the transition
    tr = (t > 0.5) & (t < 1)
    assert np.all(np.diff(c[tr]) <= 0)


@settings(max_examples=60, deadline=None)
@given(st.floats(-1.6, 1.6).filter(lambda t: abs(abs(t) - 0.5) > 0.01 and abs(abs(t) - 1) > 0.01))
def test_cutoff_derivatives_match_finite_differences(t):
    h = 1e-5
    for f in (chi, phi):
        for order in (0, 1):
            fd = (f(t + h, order) - f(t - h, order)) / (2 * h)
            assert f(t, order + 1) == pytest.approx(fd, abs=2e-4, rel=2e-4)


def test_phi_identity():
    t = np.linspace(-3, 3, 2001)
    t = t[t != 0]
    assert np.allclose(t * phi(t), 1 - chi(t), atol=1e-15)


def test_orders_above_two_raise():
    with pytest.raises(ValueError):
        chi(0.7, 3)
