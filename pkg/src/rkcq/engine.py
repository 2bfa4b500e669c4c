"""Convolution quadrature weights and the discrete convolution.

Weights of an operator-valued transfer function K are the Taylor coefficients
of K(Delta(zeta)/h) at zeta = 0, recovered by a scaled FFT on the circle
|zeta| = lambda,

    W_j = lambda^{-j}/L * sum_l K(Delta(lambda e^{2 pi i l/L})/h) e^{-2 pi i l j/L},

with L a power of two >= 2(N+1). The radius lambda = eps**(1/(2L)) trades the
aliasing floor sqrt(eps) against roundoff amplified by lambda^{-N} <=
eps**(-N/(2L)); the default eps = 1e-24 keeps the aliasing floor at 1e-12
while the amplification stays <= 1e3, which measurement shows is required for
weight-level accuracy near 1e-9 (kernels with non-decaying weight tails sit
exactly on the aliasing floor).
"""

import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .tableaux import ButcherTableau, tableau_from_json, tableau_to_json

__all__ = [
    "TransferFunction",
    "CQWeightSet",
    "delta_matrix",
    "transfer_of_matrix",
    "compute_weights",
    "apply_cq",
    "sample_stage_signal",
    "scalar_reference_solution",
    "save_weights",
    "load_weights",
]


@dataclass
class TransferFunction:
    """Transfer function K(s), analytic for Re s >= sigma0 with |K| <= M|s|^mu.

    For dim == 1, fn maps a complex ndarray to an ndarray elementwise. For
    dim == n > 1, fn maps a single complex s to an (n, n) matrix. Kernels with
    K(conj s) = conj(K(s)) (every kernel with a real time-domain response)
    should keep conj_symmetric True: only the upper half of the FFT circle is
    evaluated and the weights come out real.
    """

    fn: callable
    dim: int = 1
    mu: float = 0.0
    sigma0: float = 0.1
    bound: float = None
    key: str = None
    conj_symmetric: bool = True

    def __call__(self, s):
        return self.fn(s)


@dataclass
class CQWeightSet:
    """Stage-block weights W_j, the post-stage coefficients gamma_j, and the
    recursion data needed to apply the discrete convolution."""

    h: float
    N: int
    tableau: ButcherTableau
    dim: int
    W: np.ndarray
    gamma: np.ndarray
    r_infinity: float
    eps: float


def delta_matrix(tab, zeta):
    """Delta(zeta) = (zeta/(1-zeta) 1 b^T + A)^{-1} for |zeta| < 1."""
    m = tab.m
    M = zeta / (1.0 - zeta) * np.outer(np.ones(m), tab.b) + tab.A
    if np.linalg.cond(M) > 1e14:
        raise np.linalg.LinAlgError("Delta(zeta) is numerically singular at zeta=%r" % zeta)
    return np.linalg.inv(M)


def transfer_of_matrix(K, Z, h):
    """Evaluate the operator block K(Z/h) through the eigendecomposition of Z.

    Returns an (m*dim, m*dim) matrix. Raises when the eigenvector basis is
    too ill conditioned for the similarity transform to be trustworthy.
    """
    w, E = np.linalg.eig(Z)
    if np.linalg.cond(E) > 1e10:
        raise np.linalg.LinAlgError(
            "eigenvector condition number exceeds 1e10; use a different FFT radius"
        )
    Einv = np.linalg.inv(E)
    if K.dim == 1:
        return E @ np.diag(np.asarray(K.fn(w / h), dtype=complex)) @ Einv
    Kst = np.stack([np.asarray(K.fn(wi / h), dtype=complex) for wi in w])
    m, n = Z.shape[0], K.dim
    return np.einsum("ai,ib,icd->acbd", E, Einv, Kst).reshape(m * n, m * n)


def _fft_grid(N, eps):
    L = 1
    while L < 2 * (N + 1):
        L *= 2
    return L, eps ** (1.0 / (2 * L))


def _eval_kernel_stack(fn, svals):
    # worker for the process pool: one (n, n) matrix per frequency
    return [np.asarray(fn(s), dtype=complex) for s in svals]


def _hermitian_dft(Fh, L, N, chunk=1 << 22):
    # forward DFT of a Hermitian-symmetric spectrum, real output, column-chunked
    # to bound peak memory (Fh holds rows l = 0..L/2)
    Lh, nc = Fh.shape
    W = np.empty((N + 1, nc))
    step = max(1, chunk // max(L, 1))
    for c0 in range(0, nc, step):
        # hfft(a) is the forward transform sum_l a_l e^{-2pi i l j / L} of the
        # Hermitian extension of a; conjugating the input would flip the sign
        # of the exponent and return coefficient L-j in place of j
        W[:, c0 : c0 + step] = np.fft.hfft(Fh[:, c0 : c0 + step], n=L, axis=0)[: N + 1]
    return W


def compute_weights(K, tab, h, N, eps=1e-24, threads=1):
    """Convolution quadrature weights of K for tableau tab, step h, N steps.

    Returns a CQWeightSet with W of shape (N+1, m*dim, m*dim), real when the
    kernel is conjugate-symmetric, and gamma of shape (N+1, m).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if h * K.sigma0 > 1.0:
        warnings.warn("h*sigma0 = %.3g > 1; step too coarse for this kernel" % (h * K.sigma0))
    if not K.conj_symmetric:
        return _compute_weights_full_circle(K, tab, h, N, eps)
    m = tab.m
    n = K.dim
    L, lam = _fft_grid(N, eps)
    Lh = L // 2 + 1

    ls = np.arange(Lh)
    zetas = lam * np.exp(2j * np.pi * ls / L)
    Ms = zetas[:, None, None] / (1.0 - zetas[:, None, None]) * np.outer(np.ones(m), tab.b)[None] + tab.A[None]
    if np.linalg.cond(Ms).max() > 1e14:
        raise np.linalg.LinAlgError("Delta(zeta) singular on the FFT circle")
    Ds = np.linalg.inv(Ms)
    w, E = np.linalg.eig(Ds)
    if np.linalg.cond(E).max() > 1e10:
        raise np.linalg.LinAlgError(
            "eigenvector condition number exceeds 1e10 on the FFT circle; change eps"
        )
    Einv = np.linalg.inv(E)
    s = w / h
    if s.real.min() < K.sigma0:
        warnings.warn(
            "FFT circle reaches Re s = %.3g below sigma0 = %.3g" % (s.real.min(), K.sigma0)
        )

    if n == 1:
        Kv = np.asarray(K.fn(s), dtype=complex)
        Fh = np.einsum("lai,li,lib->lab", E, Kv, Einv)
    else:
        Fh = np.empty((Lh, m * n, m * n), dtype=complex)
        if threads > 1:
            flat = s.ravel()
            chunks = np.array_split(np.arange(flat.size), threads * 4)
            with ProcessPoolExecutor(max_workers=threads) as pool:
                futs = [pool.submit(_eval_kernel_stack, K.fn, flat[ix]) for ix in chunks]
                vals = [v for f in futs for v in f.result()]
            Kst = np.stack(vals).reshape(Lh, m, n, n)
            for l in range(Lh):
                Fh[l] = np.einsum("ai,ib,icd->acbd", E[l], Einv[l], Kst[l]).reshape(m * n, m * n)
        else:
            for l in range(Lh):
                Kst = np.stack([np.asarray(K.fn(si), dtype=complex) for si in s[l]])
                Fh[l] = np.einsum("ai,ib,icd->acbd", E[l], Einv[l], Kst).reshape(m * n, m * n)

    W = _hermitian_dft(Fh.reshape(Lh, -1), L, N)
    W *= (lam ** -np.arange(N + 1))[:, None] / L
    W = W.reshape(N + 1, m * n, m * n)

    _identity_sanity(tab, E, Einv, L, lam, N)
    return CQWeightSet(h, N, tab, n, W, _gamma_coeffs(tab, N), tab.r_infinity, eps)


def _compute_weights_full_circle(K, tab, h, N, eps):
    # complex weights for kernels without conjugate symmetry; full circle
    m, n = tab.m, K.dim
    L, lam = _fft_grid(N, eps)
    zetas = lam * np.exp(2j * np.pi * np.arange(L) / L)
    F = np.empty((L, m * n, m * n), dtype=complex)
    for l, zeta in enumerate(zetas):
        F[l] = transfer_of_matrix(K, delta_matrix(tab, zeta), h)
    W = np.fft.fft(F, axis=0)[: N + 1]
    W *= (lam ** -np.arange(N + 1))[:, None, None] / L
    return CQWeightSet(h, N, tab, n, W, _gamma_coeffs(tab, N), tab.r_infinity, eps)


def _identity_sanity(tab, E, Einv, L, lam, N):
    # the same DFT applied to K(s) = 1 must reproduce identity weights
    m = tab.m
    Fh = np.einsum("lai,lib->lab", E, Einv).reshape(E.shape[0], -1)
    W1 = _hermitian_dft(Fh, L, N)
    W1 *= (lam ** -np.arange(N + 1))[:, None] / L
    W1 = W1.reshape(N + 1, m, m)
    if np.abs(W1[0] - np.eye(m)).max() > 1e-9 or np.abs(W1[1:]).sum() > 1e-9:
        raise RuntimeError("identity-kernel sanity check failed; FFT weight path is broken")


def _gamma_coeffs(tab, N):
    # gamma_0 = 0, gamma_j = R(inf)^{j-1} b^T A^{-1}
    v = np.linalg.solve(tab.A.T, tab.b)
    rinf = tab.r_infinity
    g = np.zeros((N + 1, tab.m))
    cur = v.copy()
    for j in range(1, N + 1):
        g[j] = cur
        cur = cur * rinf
    return g


def apply_cq(wset, stage_samples):
    """Apply the discrete convolution to stage samples g(t_j + c h).

    stage_samples has shape (N+1, m) for scalar kernels or (N+1, m, n).
    Returns grid values u_0..u_N, shape (N+1,) or (N+1, n). u_n depends only
    on samples at steps <= n.
    """
    N, m, n = wset.N, wset.tableau.m, wset.dim
    g = np.asarray(stage_samples)
    scalar = g.ndim == 2
    gh = g.reshape(N + 1, m * n)
    U = np.zeros((N + 1, m * n), dtype=np.result_type(wset.W, gh))
    for k in range(N + 1):
        U[k] = np.einsum("jab,jb->a", wset.W[: k + 1][::-1], gh[: k + 1])
    v = np.linalg.solve(wset.tableau.A.T, wset.tableau.b)
    vU = np.einsum("i,jio->jo", v, U.reshape(N + 1, m, n))
    u = np.zeros((N + 1, n), dtype=U.dtype)
    for k in range(1, N + 1):
        u[k] = wset.r_infinity * u[k - 1] + vU[k - 1]
    if np.isrealobj(wset.W) and np.isrealobj(g):
        u = u.real
    return u[:, 0] if scalar else u


def sample_stage_signal(g, h, N, c):
    """Stage samples g(t_n + c_i h) of a vectorized scalar signal, (N+1, m).

    Warns when g(0) is not numerically zero (the convolution assumes a
    causal signal vanishing at t = 0).
    """
    t = np.arange(N + 1) * h
    if np.max(np.abs(np.asarray(g(0.0)))) > 1e-12:
        warnings.warn("signal does not vanish at t=0; CQ error bounds degrade")
    return g(t[:, None] + c[None, :] * h)


def scalar_reference_solution(K, g, T, N_ref, tab, eps=1e-24):
    """Grid trace of K(d/dt)g computed at N_ref steps with tableau tab."""
    h = T / N_ref
    wset = compute_weights(K, tab, h, N_ref, eps=eps)
    return apply_cq(wset, sample_stage_signal(g, h, N_ref, tab.c))


def save_weights(wset, path):
    """Store a weight set as an .npz artifact."""
    meta = {
        "h": wset.h,
        "N": wset.N,
        "dim": wset.dim,
        "r_infinity": wset.r_infinity,
        "eps": wset.eps,
        "tableau": tableau_to_json(wset.tableau),
    }
    np.savez(path, W=wset.W, gamma=wset.gamma, meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8))


def load_weights(path):
    d = np.load(path)
    meta = json.loads(d["meta"].tobytes().decode())
    return CQWeightSet(
        meta["h"],
        meta["N"],
        tableau_from_json(meta["tableau"]),
        meta["dim"],
        d["W"],
        d["gamma"],
        meta["r_infinity"],
        meta["eps"],
    )
