import numpy as np
import pytest

from skam import fields as F
from skam.context import NotSelfAdjointError, ParameterError, SemiclassicalContext
from skam.hamiltonian import free
from skam.normal_form import normal_form_iterate
from skam.oracle import (basis_index, basis_window, build_quasimode, eigensolve, quantize, site_for,
                         unitary_exp)
from skam.symbols import FourierSymbol, adjoint, selfadjoint_part

from conftest import cos_perturbation, random_symbol

H1 = free(1)


def test_quantize_examples():
    h = 2.0 ** -4
    ctx = SemiclassicalContext(d=1, hbar=h)
    Q = quantize(H1.symbol(ctx), 8).dense()
    assert np.allclose(Q, np.diag(0.5 * (h * np.arange(-8, 9)) ** 2))
    V = quantize(cos_perturbation(ctx), 8).dense()
    assert np.allclose(V, np.eye(17, k=1) + np.eye(17, k=-1))
    X = quantize(FourierSymbol(ctx, {(1,): F.Poly(0, [1.0])}), 8).dense()
    # row m = k + 1, column k, entry hbar k
    assert X[basis_index((3,), 8), basis_index((2,), 8)] == pytest.approx(2 * h)


def test_basis_layout():
    B = basis_window(2, 2)
    assert B.shape == (25, 2)
    for i, k in enumerate(B):
        assert basis_index(k, 2) == i
    with pytest.raises(IndexError):
        basis_index((3, 0), 2)
    assert site_for([1.5], 2.0 ** -5) == (48,)


def test_quantized_adjoint_is_conjugate_transpose(rng):
    ctx = SemiclassicalContext(d=2, hbar=2.0 ** -4)
    for _ in range(5):
        P = random_symbol(rng, ctx)
        A = quantize(adjoint(P), 8).dense()
        assert np.max(np.abs(A - quantize(P, 8).dense().conj().T)) <= 1e-13
        assert quantize(selfadjoint_part(P), 8).hermitian_defect() <= 1e-13


def test_basis_too_small():
    ctx = SemiclassicalContext(d=1, hbar=0.1)
    P = FourierSymbol.from_modes(ctx, {(3,): 1.0})
    with pytest.raises(ParameterError, match="bandwidth"):
        quantize(P, 3)


def test_eigensolve_and_hermitian_check():
    w, V = eigensolve(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(w, [1, 2, 3])
    with pytest.raises(NotSelfAdjointError):
        eigensolve(np.array([[0, 1.0], [0, 0]]))


def test_unitary_exp_group_law():
    ctx = SemiclassicalContext(d=1, hbar=2.0 ** -4)
    P = cos_perturbation(ctx)
    U1, U2, U3 = (unitary_exp(P, s, 12) for s in (0.3, 0.4, 0.7))
    assert np.allclose(U1 @ U2, U3, atol=1e-12)
    assert np.allclose(U3.conj().T @ U3, np.eye(25), atol=1e-12)
    with pytest.raises(NotSelfAdjointError):
        unitary_exp(FourierSymbol(ctx, {(1,): F.ONE}), 0.1, 12)


def test_trivial_quasimode_is_exact():
    ctx = SemiclassicalContext(d=1, hbar=2.0 ** -4)
    nf = normal_form_iterate(H1, FourierSymbol.zero(ctx), N=1)
    rep = build_quasimode(H1, FourierSymbol.zero(ctx), nf, (20,), 40)
    assert rep.residual == 0.0 and rep.overlap == 1.0 and rep.gap <= 1e-14


def test_quasimode_site_checks():
    ctx = SemiclassicalContext(d=1, hbar=2.0 ** -4)
    K0 = cos_perturbation(ctx)
    nf = normal_form_iterate(H1, K0, N=1)
    with pytest.raises(ParameterError, match="boundary"):
        build_quasimode(H1, K0, nf, (20,), 24)


def test_second_step_improves_quasimode():
    h = 2.0 ** -5
    ctx = SemiclassicalContext(d=1, hbar=h)
    K0 = cos_perturbation(ctx)
    k = site_for([1.5], h)
    res = []
    for N in (1, 2):
        nf = normal_form_iterate(H1, K0, N=N)
        res.append(build_quasimode(H1, K0, nf, k, k[0] + 40, margin=40).residual)
    assert res[1] < res[0]


def test_quantized_bracket_matches_scaled_commutator():
    """Op(i Omega_k P) agrees with (i/hbar)[Op(H), Op(P)] to first order in hbar."""
    from skam.fitting import fit_slope
    from skam.oracle import block_difference
    from skam.symbols import poisson_with_H

    hs = [2.0 ** -j for j in range(3, 8)]
    errs = []
    for h in hs:
        ctx = SemiclassicalContext(d=1, hbar=h)
        P = random_symbol(np.random.default_rng(0), ctx)
        K = int(round(2 / h))
        QH, QP = quantize(H1.symbol(ctx), K), quantize(P, K)
        C = (QH @ QP - QP @ QH) * (1j / h)
        QX = quantize(poisson_with_H(P, H1), K)
        idx = QX.interior(bandwidth=P.bandwidth, margin=1)
        errs.append(block_difference(QX.matrix, C, idx))
    assert fit_slope(hs, errs).slope >= 0.9
