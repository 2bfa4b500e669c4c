"""Weight computation and discrete convolution."""

import numpy as np
import pytest

from rkcq.engine import (
    CQWeightSet,
    TransferFunction,
    apply_cq,
    compute_weights,
    delta_matrix,
    load_weights,
    sample_stage_signal,
    save_weights,
    scalar_reference_solution,
    transfer_of_matrix,
)
from rkcq.kernels import eval_kmu, kmu_transfer, power_transfer, sin_pow_exp
from rkcq.tableaux import gauss_tableau, radau_iia_tableau


def identity_kernel():
    return TransferFunction(fn=lambda s: np.ones_like(np.asarray(s, dtype=complex)), dim=1, mu=0.0)


def _triangular_matrix_kernel(s):
    # module level so the process-pool path can pickle it
    return np.array([[1.0 / s, 0.5], [0.0, s]])


def test_delta_matrix_inverse_relation():
    tab = gauss_tableau(3)
    zeta = 0.3 + 0.2j
    D = delta_matrix(tab, zeta)
    M = zeta / (1.0 - zeta) * np.outer(np.ones(3), tab.b) + tab.A
    assert np.abs(D @ M - np.eye(3)).max() < 1e-13


def test_delta_matrix_rejects_singular_argument():
    # at zeta = 1 the rank-one part blows up
    tab = gauss_tableau(2)
    with pytest.raises(Exception):
        delta_matrix(tab, 1.0)


def test_transfer_of_matrix_scalar_matches_direct():
    tab = gauss_tableau(2)
    Z = delta_matrix(tab, 0.1 + 0.05j)
    K = power_transfer(1.0)
    # K(Z/h) for K(s) = s is just Z/h
    h = 0.25
    assert np.abs(transfer_of_matrix(K, Z, h) - Z / h).max() < 1e-11


def test_identity_kernel_weights():
    tab = gauss_tableau(3)
    ws = compute_weights(identity_kernel(), tab, 0.05, 32)
    assert np.abs(ws.W[0] - np.eye(3)).max() < 1e-10
    assert np.abs(ws.W[1:]).sum() < 1e-9


def test_integrator_weights_closed_form():
    # K(s) = 1/s has K(Delta(zeta)/h) = h A + h 1 b^T (zeta + zeta^2 + ...),
    # so W_0 = h A and every later block equals h 1 b^T
    tab = gauss_tableau(3)
    h, N = 3.0 / 64, 64
    ws = compute_weights(power_transfer(-1.0), tab, h, N)
    assert np.abs(ws.W[0] - h * tab.A).max() < 1e-12
    ones_bt = h * np.outer(np.ones(3), tab.b)
    for j in range(1, N + 1):
        assert np.abs(ws.W[j] - ones_bt).max() < 1e-12


def test_integrator_applied_to_cubic():
    tab = gauss_tableau(3)
    h, N = 3.0 / 64, 64
    ws = compute_weights(power_transfer(-1.0), tab, h, N)
    u = apply_cq(ws, sample_stage_signal(lambda t: np.asarray(t) ** 3, h, N, tab.c))
    t = np.arange(N + 1) * h
    assert np.abs(u - t ** 4 / 4.0).max() < 1e-8


def test_half_derivative_composes_to_derivative():
    # weights of s^(1/2) convolved with themselves match the weights of s
    tab = gauss_tableau(3)
    h, N = 0.1, 24
    Wh = compute_weights(power_transfer(0.5), tab, h, N).W
    Ws = compute_weights(power_transfer(1.0), tab, h, N).W
    conv = np.zeros_like(Ws)
    for j in range(N + 1):
        for k in range(j + 1):
            conv[j] += Wh[j - k] @ Wh[k]
    assert np.abs(conv - Ws).max() < 1e-9


def test_weights_agree_across_horizon_lengths():
    # the first blocks are Taylor coefficients of the same function, so
    # extending N (and with it the FFT grid) must not move them
    tab = gauss_tableau(2)
    K = kmu_transfer(0.0)
    W16 = compute_weights(K, tab, 0.05, 16).W
    W40 = compute_weights(K, tab, 0.05, 40).W
    assert np.abs(W16 - W40[:17]).max() < 1e-10


def test_weights_linear_in_kernel():
    tab = gauss_tableau(2)
    h, N = 0.05, 12
    K1 = power_transfer(-1.0)
    K2 = kmu_transfer(0.0)
    Ksum = TransferFunction(fn=lambda s: 2.0 * K1.fn(s) + 0.5 * K2.fn(s), dim=1, mu=0.0)
    Wsum = compute_weights(Ksum, tab, h, N).W
    Wparts = 2.0 * compute_weights(K1, tab, h, N).W + 0.5 * compute_weights(K2, tab, h, N).W
    assert np.abs(Wsum - Wparts).max() < 1e-12


def test_full_circle_path_matches_hermitian_path():
    tab = gauss_tableau(3)
    K = kmu_transfer(0.0)
    Kfull = TransferFunction(
        fn=lambda s: eval_kmu(s, 0.0), dim=1, mu=0.0, sigma0=0.1, conj_symmetric=False
    )
    Wh = compute_weights(K, tab, 0.05, 16).W
    Wf = compute_weights(Kfull, tab, 0.05, 16).W
    assert np.iscomplexobj(Wf)
    assert np.abs(Wf.imag).max() < 1e-12
    assert np.abs(Wf.real - Wh).max() < 1e-12


def test_real_kernel_gives_real_weights_and_output():
    tab = radau_iia_tableau(2)
    ws = compute_weights(kmu_transfer(0.0), tab, 0.05, 16)
    assert ws.W.dtype == np.float64
    u = apply_cq(ws, sample_stage_signal(sin_pow_exp, 0.05, 16, tab.c))
    assert u.dtype == np.float64


def test_output_is_causal():
    # perturbing future stage samples must leave earlier outputs bit-identical
    tab = gauss_tableau(2)
    h, N = 0.1, 20
    ws = compute_weights(kmu_transfer(1.0), tab, h, N)
    g = sample_stage_signal(sin_pow_exp, h, N, tab.c)
    u0 = apply_cq(ws, g)
    g2 = g.copy()
    g2[11:] += 37.5
    u1 = apply_cq(ws, g2)
    assert np.array_equal(u0[:11], u1[:11])
    assert np.abs(u1[11:] - u0[11:]).max() > 1e-3


def test_matrix_valued_kernel_blocks():
    # a diagonal matrix kernel must reproduce the two scalar weight sets
    tab = gauss_tableau(2)
    h, N = 0.1, 8

    def fn(s):
        return np.diag([1.0 / s, s])

    K = TransferFunction(fn=fn, dim=2, mu=1.0)
    W = compute_weights(K, tab, h, N).W
    Wa = compute_weights(power_transfer(-1.0), tab, h, N).W
    Wb = compute_weights(power_transfer(1.0), tab, h, N).W
    assert W.shape == (N + 1, 4, 4)
    assert np.abs(W[:, 0::2, 0::2] - Wa).max() < 1e-10
    assert np.abs(W[:, 1::2, 1::2] - Wb).max() < 1e-10
    assert np.abs(W[:, 0::2, 1::2]).max() < 1e-10


def test_matrix_kernel_threaded_evaluation_matches_serial():
    tab = gauss_tableau(2)
    h, N = 0.1, 6
    K = TransferFunction(fn=_triangular_matrix_kernel, dim=2, mu=1.0)
    W1 = compute_weights(K, tab, h, N, threads=1).W
    W2 = compute_weights(K, tab, h, N, threads=2).W
    assert np.array_equal(W1, W2)


def test_delay_kernel_against_shift_sum():
    # K_0(s) = 1/(1 - e^{-s}) sums unit delays: u(t) = sum_k g(t - k)
    tab = gauss_tableau(3)
    u = scalar_reference_solution(kmu_transfer(0.0), sin_pow_exp, 3.0, 128, tab)
    t = np.arange(129) * (3.0 / 128)
    exact = sum(sin_pow_exp(np.maximum(t - k, 0.0)) for k in range(3))
    assert np.abs(u - exact).max() < 1e-7


def test_gamma_coefficients_structure():
    # gamma_j = R(inf)^{j-1} b^T A^{-1}; Radau IIA has R(inf) = 0 and
    # b^T A^{-1} = e_m, so only gamma_1 survives
    ws = compute_weights(power_transfer(-1.0), radau_iia_tableau(2), 0.1, 8)
    assert np.abs(ws.gamma[0]).max() == 0.0
    assert ws.gamma[1] == pytest.approx([0.0, 1.0], abs=1e-13)
    assert np.abs(ws.gamma[2:]).max() == 0.0
    wg = compute_weights(power_transfer(-1.0), gauss_tableau(2), 0.1, 8)
    norms = np.linalg.norm(wg.gamma[1:], axis=1)
    assert norms == pytest.approx(norms[0] * np.ones(8), rel=1e-12)


def test_save_load_roundtrip_is_bitwise(tmp_path):
    tab = radau_iia_tableau(3)
    ws = compute_weights(kmu_transfer(0.5), tab, 0.05, 10)
    path = tmp_path / "w.npz"
    save_weights(ws, path)
    back = load_weights(path)
    assert isinstance(back, CQWeightSet)
    assert np.array_equal(back.W, ws.W)
    assert np.array_equal(back.gamma, ws.gamma)
    assert back.h == ws.h and back.N == ws.N and back.eps == ws.eps
    assert back.r_infinity == ws.r_infinity
    assert np.array_equal(back.tableau.A, ws.tableau.A)
    urun = apply_cq(back, sample_stage_signal(sin_pow_exp, 0.05, 10, back.tableau.c))
    assert np.array_equal(urun, apply_cq(ws, sample_stage_signal(sin_pow_exp, 0.05, 10, tab.c)))


def test_rejects_bad_horizon():
    with pytest.raises(ValueError):
        compute_weights(kmu_transfer(0.0), gauss_tableau(2), 0.1, 0)


def test_warns_on_coarse_step():
    # a step too coarse for sigma0 fires both the step warning and the
    # contour-reach warning
    K = kmu_transfer(0.0, sigma0=30.0)
    with pytest.warns(UserWarning) as rec:
        compute_weights(K, gauss_tableau(2), 0.1, 4)
    messages = [str(w.message) for w in rec]
    assert any("too coarse" in msg for msg in messages)
    assert any("below sigma0" in msg for msg in messages)


def test_warns_on_noncausal_signal():
    with pytest.warns(UserWarning, match="vanish"):
        sample_stage_signal(lambda t: np.asarray(t) + 1.0, 0.1, 4, gauss_tableau(2).c)


def test_stage_samples_shape_and_values():
    tab = gauss_tableau(2)
    g = sample_stage_signal(lambda t: np.asarray(t) ** 2, 0.5, 4, tab.c)
    assert g.shape == (5, 2)
    t = np.arange(5) * 0.5
    assert g == pytest.approx((t[:, None] + tab.c[None, :] * 0.5) ** 2)
