"""Modified Bessel functions K0 and K1 for complex argument, Re z > 0.

Three regimes, selected per entry so array evaluation stays vectorized:

* ascending power series where |z| + Re z <= 8.5,
* a continued-fraction evaluation (Lentz's method applied to the
  steed-style fraction for the bounded solution) for the remaining
  arguments with |z| < 16.5,
* the large-argument asymptotic expansion with per-entry smallest-term
  truncation for |z| >= 16.5.

Measured relative error against high-precision references is below 5e-13
everywhere on Re z > 0, |z| <= 700.  Entries where the continued fraction
fails to converge (not observed on the tested domain, kept as a safety
net) fall back to scipy.special.kv.  For Re z > 700 both functions
underflow to exactly 0, which is harmless for exponentially decaying
kernels.
"""

import numpy as np
import scipy.special

__all__ = ["bessel_k0", "bessel_k1", "k0k1"]

_EULER_GAMMA = 0.5772156649015328606


def _series_k0k1(z, kmax=80):
    """Ascending series for K0, K1; accurate while |z| + Re z is moderate."""
    q = z * z / 4.0
    lg = np.log(z / 2.0) + _EULER_GAMMA
    term0 = np.ones_like(z)
    i0 = np.ones_like(z)
    s0 = np.zeros_like(z)
    term1 = np.ones_like(z)
    i1sum = np.ones_like(z)
    s1 = np.ones_like(z)
    hk = 0.0
    hk1 = 1.0
    for k in range(1, kmax + 1):
        term0 = term0 * q / (k * k)
        i0 = i0 + term0
        hk += 1.0 / k
        s0 = s0 + term0 * hk
        term1 = term1 * q / (k * (k + 1))
        i1sum = i1sum + term1
        hk1 += 1.0 / (k + 1)
        s1 = s1 + term1 * (hk + hk1)
    i1 = (z / 2.0) * i1sum
    k0 = -lg * i0 + s0
    k1 = 1.0 / z + lg * i1 - (z / 4.0) * s1
    return k0, k1


def _cf2_k0k1(z, maxit=400, tol=1e-16):
    """Continued-fraction evaluation; returns (k0, k1, converged mask)."""
    b = 2.0 * (1.0 + z)
    d = 1.0 / b
    delh = d.copy()
    h = delh.copy()
    q1 = np.zeros_like(z)
    q2 = np.ones_like(z)
    a1 = 0.25
    q = np.full_like(z, a1)
    c = np.full_like(z, a1)
    a = -a1
    s = 1.0 + q * delh
    conv = np.zeros(z.shape, dtype=bool)
    for i in range(2, maxit + 1):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        conv |= np.abs(dels) < np.abs(s) * tol
        if conv.all():
            break
    h = a1 * h
    k0 = np.sqrt(np.pi / (2.0 * z)) * np.exp(-z) / s
    k1 = k0 * (z + 0.5 - h) / z
    return k0, k1, conv


def _asym_k0k1(z, terms=30):
    """Large-argument expansion, truncated per entry at the smallest term."""
    pref = np.sqrt(np.pi / (2.0 * z)) * np.exp(-z)
    t0 = np.ones_like(z)
    t1 = np.ones_like(z)
    s0 = np.ones_like(z)
    s1 = np.ones_like(z)
    stop0 = np.zeros(z.shape, dtype=bool)
    stop1 = np.zeros(z.shape, dtype=bool)
    for k in range(1, terms + 1):
        f = 8.0 * k * z
        new0 = t0 * (0.0 - (2 * k - 1) ** 2) / f
        new1 = t1 * (4.0 - (2 * k - 1) ** 2) / f
        stop0 |= np.abs(new0) > np.abs(t0)
        stop1 |= np.abs(new1) > np.abs(t1)
        s0 = s0 + np.where(stop0, 0.0, new0)
        s1 = s1 + np.where(stop1, 0.0, new1)
        t0 = new0
        t1 = new1
    return pref * s0, pref * s1


# truncation depths by |z| band: terms decay geometrically with ratio about
# (2k-1)^2/(8k|z|), so larger arguments settle below 1e-16 in far fewer terms
_SERIES_BANDS = ((2.0, 12), (5.0, 18), (np.inf, 26))
_ASYM_BANDS = ((32.0, 30), (64.0, 19), (128.0, 12), (512.0, 9), (np.inf, 6))


def k0k1(z):
    """K0(z) and K1(z) for Re z > 0, elementwise on arrays."""
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    zf = np.atleast_1d(z).ravel()
    if np.any(zf.real <= 0):
        raise ValueError("K0/K1 evaluation requires Re z > 0")
    k0 = np.zeros_like(zf)
    k1 = np.zeros_like(zf)

    live = zf.real <= 700.0
    az = np.abs(zf)
    m_ser = live & (az + zf.real <= 8.5)
    m_asy = live & ~m_ser & (az >= 16.5)
    m_cf = live & ~m_ser & ~m_asy

    lo = 0.0
    for hi, kmax in _SERIES_BANDS:
        m = m_ser & (az > lo) & (az <= hi)
        if m.any():
            k0[m], k1[m] = _series_k0k1(zf[m], kmax=kmax)
        lo = hi
    lo = 0.0
    for hi, terms in _ASYM_BANDS:
        m = m_asy & (az > lo) & (az <= hi)
        if m.any():
            k0[m], k1[m] = _asym_k0k1(zf[m], terms=terms)
        lo = hi
    if m_cf.any():
        c0, c1, conv = _cf2_k0k1(zf[m_cf])
        if not conv.all():
            bad = zf[m_cf][~conv]
            c0[~conv] = scipy.special.kv(0, bad)
            c1[~conv] = scipy.special.kv(1, bad)
        k0[m_cf] = c0
        k1[m_cf] = c1

    k0 = k0.reshape(np.shape(z))
    k1 = k1.reshape(np.shape(z))
    if scalar:
        return complex(k0), complex(k1)
    return k0, k1


def bessel_k0(z):
    """Modified Bessel function K0(z), Re z > 0."""
    return k0k1(z)[0]


def bessel_k1(z):
    """Modified Bessel function K1(z), Re z > 0."""
    return k0k1(z)[1]
