"""Smooth compactly supported bump profiles and their exact integrals.

Every smooth window used in the package (test functions, mollifier kernels,
delta-net profiles) derives from the standard bump

    B(u) = exp(-1 / (1 - u^2))   for |u| < 1,   0 otherwise,

which is infinitely differentiable with support [-1, 1].
"""

from functools import lru_cache

import numpy as np
from scipy.integrate import quad

__all__ = [
    "bump",
    "bump_derivative",
    "one_sided_profile",
    "bump_mass",
    "bump_square_mass",
]


def bump(u):
    """Evaluate B(u); accepts scalars or arrays, returns float64."""
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    with np.errstate(under="ignore"):
        out[inside] = np.exp(-1.0 / (1.0 - ui * ui))
    return out if out.ndim else float(out)


def bump_derivative(u):
    """Evaluate B'(u) = B(u) * (-2u / (1 - u^2)^2)."""
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    w = 1.0 - ui * ui
    with np.errstate(under="ignore"):
        out[inside] = np.exp(-1.0 / w) * (-2.0 * ui / (w * w))
    return out if out.ndim else float(out)


def one_sided_profile(u):
    """One-sided window supported in [0, 0.9): a bump recentered at 0.45.

    Used as the generator of strict delta nets on the half-open time axis.
    Non-negative, so its L1 norm equals its integral.
    """
    return bump((np.asarray(u, dtype=float) - 0.45) / 0.45)


@lru_cache(maxsize=1)
def bump_mass():
    """∫ B(u) du over [-1, 1] by adaptive quadrature (abs. tol 1e-14)."""
    val, _ = quad(lambda x: float(bump(x)), -1.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=400)
    return val


@lru_cache(maxsize=1)
def bump_square_mass():
    """∫ B(u)^2 du over [-1, 1] by adaptive quadrature."""
    val, _ = quad(lambda x: float(bump(x)) ** 2, -1.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=400)
    return val
