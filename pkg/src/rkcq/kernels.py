"""Built-in scalar transfer functions and time-domain data."""

import numpy as np

from .engine import TransferFunction

__all__ = [
    "eval_kmu",
    "kmu_transfer",
    "power_transfer",
    "eval_datum",
    "sin_pow_exp",
    "monomial_bump",
    "traveling_gaussian",
    "DATA",
]

SQRT2 = np.sqrt(2.0)


def eval_kmu(s, mu):
    """K_mu(s) = s^mu / (1 - e^{-s}), principal branch, Re s > 0."""
    s = np.asarray(s, dtype=complex)
    if np.any(s.real <= 0):
        raise ValueError("K_mu requires Re s > 0")
    return s ** mu / (1.0 - np.exp(-s))


def kmu_transfer(mu, sigma0=0.1):
    """TransferFunction wrapper for K_mu.

    The growth bound M is sampled on a fixed grid of the half-plane; 1/(1-e^{-s})
    is bounded there so |K_mu| <= M |s|^mu holds with a finite M.
    """
    re = np.linspace(sigma0, 50.0, 15)
    im = np.linspace(-1e3, 1e3, 31)
    s = (re[:, None] + 1j * im[None, :]).ravel()
    M = float(np.max(np.abs(eval_kmu(s, mu)) / np.abs(s) ** mu))
    return TransferFunction(
        fn=lambda s: eval_kmu(s, mu), dim=1, mu=mu, sigma0=sigma0, bound=M, key="kmu_%r" % mu
    )


def power_transfer(mu, sigma0=0.1):
    """Pure power s^mu (principal branch); the composition-rule test kernel."""
    return TransferFunction(
        fn=lambda s: np.asarray(s, dtype=complex) ** mu,
        dim=1,
        mu=mu,
        sigma0=sigma0,
        bound=1.0,
        key="power_%r" % mu,
    )


def sin_pow_exp(t):
    """g(t) = e^{-0.4 t} sin^6(t); vanishes to fifth order at t = 0."""
    t = np.asarray(t)
    return np.exp(-0.4 * t) * np.sin(t) ** 6


def monomial_bump(x, t):
    """g(x, t) = (1 + sin^2(x_2)) t^15 on boundary points x, shape (n, 2)."""
    x = np.atleast_2d(x)
    return (1.0 + np.sin(x[:, 1]) ** 2) * np.asarray(t) ** 15


def traveling_gaussian(x, t, rho=0.375, alpha=(-1.0 / SQRT2, -1.0 / SQRT2), shift=-4.0):
    """Plane traveling Gaussian pulse e^{-((t - x.alpha + shift)/rho)^2}.

    With the default parameters the pulse is 3e-5 or smaller on the unit
    circle at t = 0, a numerically causal start.
    """
    x = np.atleast_2d(x)
    a = np.asarray(alpha)
    arg = (np.asarray(t) - x @ a + shift) / rho
    return np.exp(-(arg ** 2))


DATA = {
    "sin_pow_exp": lambda x, t: sin_pow_exp(t),
    "monomial_bump": monomial_bump,
    "traveling_gaussian": traveling_gaussian,
}

_SPATIAL = {"monomial_bump", "traveling_gaussian"}


def eval_datum(kind, x, t):
    """Evaluate a named datum; kind accepts snake_case or CamelCase names.

    x is None for purely temporal data and an (n, 2) array of boundary
    points otherwise.
    """
    name = "".join("_" + ch.lower() if ch.isupper() else ch for ch in kind).lstrip("_")
    if name not in DATA:
        raise KeyError("unknown datum %r; choose from %s" % (kind, sorted(DATA)))
    if name in _SPATIAL and x is None:
        raise ValueError("datum %r needs boundary points" % kind)
    return DATA[name](x, t)
