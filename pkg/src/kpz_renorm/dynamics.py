"""Semi-implicit solvers for the stochastic heat and height equations.

All schemes treat diffusion implicitly (periodic tridiagonal system,
diagonalized by the real FFT since the operator is circulant) and the Ito
noise explicitly at the left endpoint:

    multiplicative heat:  (I - dt*Lap) Z[k+1] = Z[k] * (1 + ΔW[k])
    height equation:      (I - dt*Lap) h[k+1] = h[k] + dt*(D0 h[k])^2
                                                + ΔW[k] - c_k
with D0 the central difference and the drift correction
c_k = (C/2)*n*dt present only in the renormalized variant.  The pathwise
identity connecting the two via h = log Z holds up to a residual that
:func:`ito_residual` quantifies.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigurationError,
    GridMismatchError,
    PositivityError,
    ShapeMismatchError,
    SolverOverflowError,
)
from .grid import FieldPath, SpaceField, central_diff, laplacian, pair
from .noise import MollifiedNoisePath, WhiteNoiseLattice, ito_constant, mollify_noise

__all__ = [
    "SolverConfig",
    "ResidualReport",
    "initial_profile",
    "solve_she",
    "cole_hopf",
    "solve_kpz",
    "ito_residual",
]

VARIANTS = ("she_mollified", "she_lattice", "kpz_renormalized", "kpz_naive")

# noise-term accuracy bound for the mollified heat equation: the per-cell
# increment variance n*C*dt must stay small
NOISE_SCALE_LIMIT = 0.1


@dataclass(frozen=True)
class SolverConfig:
    """Which equation to run and with what data; used by the experiment
    runner and recorded in binary dump metadata."""

    variant: str
    n: int | None = None
    scheme: str = "semi-implicit"
    profile: dict | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigurationError(
                f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.variant != "she_lattice" and self.n is None:
            raise ConfigurationError(f"variant {self.variant!r} needs a level n")


def initial_profile(grid, kind, **params):
    """Sample a smooth initial profile preset on the grid.

    Presets: ``constant`` (value), ``sinusoid`` (amplitude, mode, phase),
    ``harmonics`` (amplitudes, modes, phases), ``bump`` (amplitude, center,
    width).
    """
    x = grid.x
    if kind == "constant":
        v = np.full(grid.M, float(params.get("value", 0.0)))
    elif kind == "sinusoid":
        a = float(params.get("amplitude", 1.0))
        m = int(params.get("mode", 1))
        p = float(params.get("phase", 0.0))
        v = a * np.sin(2 * np.pi * m * x / grid.L + p)
    elif kind == "harmonics":
        amps = params.get("amplitudes", (1.0,))
        modes = params.get("modes", tuple(range(1, len(amps) + 1)))
        phases = params.get("phases", (0.0,) * len(amps))
        if not (len(amps) == len(modes) == len(phases)):
            raise ConfigurationError("harmonics needs equal-length amplitudes/modes/phases")
        v = np.zeros(grid.M)
        for a, m, p in zip(amps, modes, phases):
            v += float(a) * np.sin(2 * np.pi * int(m) * x / grid.L + float(p))
    elif kind == "bump":
        from .bumps import bump
        a = float(params.get("amplitude", 1.0))
        c = float(params.get("center", grid.L / 2))
        w = float(params.get("width", grid.L / 4))
        v = a * bump((x - c) / w)
    elif kind == "file":
        path = params.get("path")
        if not path:
            raise ConfigurationError("file profile needs a 'path'")
        v = np.load(path) if str(path).endswith(".npy") else np.loadtxt(path)
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.shape != (grid.M,):
            raise ConfigurationError(
                f"profile file {path} holds {v.shape[0]} values, grid needs {grid.M}")
    else:
        raise ConfigurationError(f"unknown initial profile kind {kind!r}")
    return SpaceField(v, grid)


def _heat_symbol(grid):
    m = np.arange(grid.M // 2 + 1)
    return 1.0 + (4.0 * grid.dt / grid.dx ** 2) * np.sin(np.pi * m / grid.M) ** 2


def _as_values(f, grid, what="initial profile"):
    v = f.values if isinstance(f, SpaceField) else np.asarray(f, dtype=float)
    if v.shape != (grid.M,):
        raise ShapeMismatchError(f"{what} needs shape ({grid.M},), got {v.shape}")
    return v


def _resolve_increments(grid, noise, moll):
    """Return (increments-or-None, level-n-or-None) for a solver run."""
    if noise is None:
        if moll is not None and moll.grid != grid:
            raise GridMismatchError("mollifier grid does not match solver grid")
        return None, (moll.n if moll is not None else None)
    if isinstance(noise, MollifiedNoisePath):
        if moll is not None and moll is not noise.mollifier:
            raise ConfigurationError(
                "pass either a raw lattice with moll, or a pre-mollified path without moll")
        if noise.grid != grid:
            raise GridMismatchError("noise grid does not match solver grid")
        return noise.increments, noise.mollifier.n
    if not isinstance(noise, WhiteNoiseLattice):
        raise ConfigurationError(f"unsupported noise object {type(noise).__name__}")
    if noise.grid != grid:
        raise GridMismatchError("noise grid does not match solver grid")
    if moll is None:
        return noise.increments, None
    return mollify_noise(noise, moll).increments, moll.n


def _check_noise_scale(grid, n, C):
    if n is not None and grid.dt * n * C > NOISE_SCALE_LIMIT:
        raise ConfigurationError(
            f"noise-term accuracy requires dt*n*C <= {NOISE_SCALE_LIMIT}; "
            f"got {grid.dt * n * C:.4g} (dt={grid.dt:g}, n={n})")


def solve_she(grid, noise=None, moll=None, f=None):
    """Multiplicative-noise heat equation; returns the positive path Z.

    Z[0] = exp(f).  `noise` may be a raw lattice (optionally mollified by
    `moll`), an already mollified path, or None for the deterministic heat
    flow.  Fails with PositivityError (reporting the first failing cell)
    rather than returning a non-positive value.
    """
    if f is None:
        raise ConfigurationError("solve_she requires an initial profile f")
    fv = _as_values(f, grid)
    inc, n = _resolve_increments(grid, noise, moll)
    if n is not None:
        _check_noise_scale(grid, n, ito_constant())

    symbol = _heat_symbol(grid)
    Z = np.empty(grid.shape_path)
    with np.errstate(over="raise"):
        z = np.exp(fv)
    Z[0] = z
    for k in range(grid.K):
        rhs = z * (1.0 + inc[k]) if inc is not None else z
        z = np.fft.irfft(np.fft.rfft(rhs) / symbol, n=grid.M)
        if not z.min() > 0.0:
            i = int(np.argmin(z))
            raise PositivityError(
                f"heat solution lost positivity at step k={k + 1}, cell i={i} "
                f"(value {z[i]:.3g}); reduce dt or the noise level")
        Z[k + 1] = z
    return FieldPath(Z, grid)


def cole_hopf(Z: FieldPath):
    """Pointwise logarithm of a strictly positive path."""
    v = Z.values
    if not v.min() > 0.0:
        k, i = np.unravel_index(int(np.argmin(v)), v.shape)
        raise PositivityError(
            f"cole_hopf needs strictly positive input; Z[{k},{i}] = {v[k, i]:.3g}")
    return FieldPath(np.log(v), Z.grid)


def solve_kpz(grid, noise=None, moll=None, f=None, renormalized=True,
              nonlinearity_enabled=True, overflow_bound=1e4):
    """Height equation with squared central gradient; returns the path h.

    With ``renormalized`` the drift correction (C/2)*n*dt is subtracted each
    step; without it the height drifts by about (C/2)*n*t, which is the
    measured output of divergence studies, not an error.  The run aborts
    with SolverOverflowError if |h| exceeds ``overflow_bound`` (set it above
    the predicted drift for the chosen level).  ``nonlinearity_enabled=False``
    drops the gradient-squared term; it exists for drift bookkeeping checks.
    """
    if f is None:
        raise ConfigurationError("solve_kpz requires an initial profile f")
    fv = _as_values(f, grid)
    inc, n = _resolve_increments(grid, noise, moll)
    counterterm = 0.0
    if n is not None:
        C = ito_constant()
        _check_noise_scale(grid, n, C)
        if renormalized:
            counterterm = 0.5 * C * n * grid.dt
    elif renormalized and inc is not None:
        raise ConfigurationError("renormalized height equation needs a mollifier level")

    symbol = _heat_symbol(grid)
    H = np.empty(grid.shape_path)
    H[0] = fv
    h = fv.copy()
    for k in range(grid.K):
        rhs = h - counterterm
        if nonlinearity_enabled:
            g = central_diff(h, grid.dx)
            rhs = rhs + grid.dt * g * g
        if inc is not None:
            rhs = rhs + inc[k]
        h = np.fft.irfft(np.fft.rfft(rhs) / symbol, n=grid.M)
        bad = np.abs(h).max()
        if not bad <= overflow_bound:
            i = int(np.argmax(np.abs(h)))
            raise SolverOverflowError(
                f"|h| reached {bad:.3g} > bound {overflow_bound:g} at step "
                f"k={k + 1}, cell i={i}")
        H[k + 1] = h
    return FieldPath(H, grid)


@dataclass(frozen=True)
class ResidualReport:
    """Pathwise drift-identity defect of a height path.

    sup_norm is the max over all lattice points of |R|; weak_norms pairs R
    against the supplied space-time test functions.
    """

    sup_norm: float
    weak_norms: tuple
    dt_used: float
    dx_used: float
    residual: FieldPath

    def weak_norm(self, label):
        for lab, val in self.weak_norms:
            if lab == label:
                return val
        raise KeyError(label)


def ito_residual(H: FieldPath, noise=None, moll=None, f=None, test_functions=()):
    """Defect of H against its integrated height equation.

    R[k] = H[k] - f - sum_{j<k} (Lap H[j] + (D0 H[j])^2) dt - W^n_{t_k}
           + (C/2) n t_k,
    with the noise term and drift correction present only when noise and a
    mollifier are supplied.
    """
    grid = H.grid
    fv = _as_values(f if f is not None else H.values[0], grid)
    zeros = np.zeros((1, grid.M))

    body = H.values[:-1]
    rate = laplacian(body, grid.dx) + central_diff(body, grid.dx) ** 2
    drift = np.vstack([zeros, np.cumsum(rate, axis=0) * grid.dt])

    R = H.values - fv[None, :] - drift
    if noise is not None:
        inc, n = _resolve_increments(grid, noise, moll)
        R = R - np.vstack([zeros, np.cumsum(inc, axis=0)])
        if n is not None:
            R = R + (0.5 * ito_constant() * n) * grid.t[:, None]

    Rpath = FieldPath(R, grid)
    weak = tuple((tf.label, pair(Rpath, tf)) for tf in test_functions)
    return ResidualReport(float(np.abs(R).max()), weak, grid.dt, grid.dx, Rpath)
