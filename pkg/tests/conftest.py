import numpy as np
import pytest

from skam import fields as F
from skam.context import SemiclassicalContext
from skam.symbols import FourierSymbol

_ACCEPTANCE = []


@pytest.fixture
def acceptance_log():
    """Collects one line per acceptance criterion for the terminal summary."""
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE:
        terminalreporter.write_line(line)


def random_field(rng, d, kind=None):
    """Smooth hbar-independent coefficient field built from random primitives."""
    kind = kind or rng.choice(["poly", "trig", "mix"])
    if kind == "poly":
        M = rng.normal(size=(d, d))
        return F.Poly(complex(*rng.normal(size=2)), rng.normal(size=d) + 1j * rng.normal(size=d), M + M.T)
    if kind == "trig":
        return F.Trig(complex(*rng.normal(size=2)), rng.normal(size=d), rng.uniform(0, 2 * np.pi))
    return F.add(F.Trig(complex(*rng.normal(size=2)), rng.normal(size=d)),
                 F.mul(F.Poly(rng.normal(), rng.normal(size=d)), F.Trig(1.0, rng.normal(size=d), 0.3)))


def random_symbol(rng, ctx, radius=2, modes=3):
    """Band-limited symbol with ``modes`` random modes in |k|_inf <= radius."""
    out = {}
    while len(out) < modes:
        k = tuple(int(c) for c in rng.integers(-radius, radius + 1, size=ctx.d))
        out[k] = random_field(rng, ctx.d)
    return FourierSymbol(ctx, out)


def cos_perturbation(ctx, amp=1.0, mean=0.0):
    """amp * 2 cos(x_1) + mean."""
    k = (1,) + (0,) * (ctx.d - 1)
    mk = tuple(-c for c in k)
    modes = {k: amp, mk: amp}
    if mean:
        modes[(0,) * ctx.d] = mean
    return FourierSymbol.from_modes(ctx, modes)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ctx1():
    return SemiclassicalContext(d=1, hbar=2.0 ** -5)


@pytest.fixture
def ctx2():
    return SemiclassicalContext(d=2, hbar=2.0 ** -5)
