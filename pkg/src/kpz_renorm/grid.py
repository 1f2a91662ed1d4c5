"""Periodic space-time lattice, field containers, stencils, and pairings.

The domain is the torus [0, L) discretized by M equispaced points, evolved
over K steps of size dt.  Fields live either on one time slice
(:class:`SpaceField`, M values) or on the full lattice (:class:`FieldPath`,
(K+1) x M values with row 0 the initial condition).

Test functions are exact discrete spatial derivatives of separable bump
windows, so every row sums to zero by telescoping; pairing any field that is
constant in x against them gives zero to machine precision rather than to
quadrature accuracy.
"""

from dataclasses import dataclass, field

import numpy as np

from .bumps import bump, bump_derivative
from .errors import (
    ConfigurationError,
    ShapeMismatchError,
    SupportViolationError,
)

__all__ = [
    "GridSpec",
    "SpaceField",
    "FieldPath",
    "SpaceTimeTestFunction",
    "SpatialTestFunction",
    "make_grid",
    "make_test_function",
    "make_spatial_test_function",
    "pair",
    "pair_space",
    "spatial_stencils",
    "forward_diff",
    "backward_diff",
    "central_diff",
    "laplacian",
]


def _readonly(a):
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GridSpec:
    """Periodic lattice geometry: length L, M points, K steps of size dt.

    dx = L/M and T = K*dt are derived once.  Spatial indices wrap modulo M.
    """

    L: float
    M: int
    dt: float
    K: int
    dx: float = field(init=False)
    T: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "dx", self.L / self.M)
        object.__setattr__(self, "T", self.K * self.dt)

    @property
    def x(self):
        """Spatial coordinates x_i = i*dx, i = 0..M-1."""
        return np.arange(self.M) * self.dx

    @property
    def t(self):
        """Time coordinates t_k = k*dt, k = 0..K."""
        return np.arange(self.K + 1) * self.dt

    @property
    def shape_path(self):
        return (self.K + 1, self.M)


def make_grid(L, M, dt, K):
    """Validate and build a :class:`GridSpec`.

    M must be a power of two (>= 8); all sizes must be positive.
    """
    if not L > 0:
        raise ConfigurationError(f"L must be positive, got {L}")
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    if not (isinstance(K, (int, np.integer)) and K >= 1):
        raise ConfigurationError(f"K must be a positive integer, got {K}")
    if not (isinstance(M, (int, np.integer)) and M >= 8):
        raise ConfigurationError(f"M must be an integer >= 8, got {M}")
    M = int(M)
    if M & (M - 1) != 0:
        raise ConfigurationError(f"M must be a power of two, got {M}")
    return GridSpec(float(L), M, float(dt), int(K))


@dataclass(frozen=True)
class SpaceField:
    """One time slice of a field: M values on the spatial lattice."""

    values: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        v = _readonly(self.values)
        if v.shape != (self.grid.M,):
            raise ShapeMismatchError(
                f"SpaceField needs shape ({self.grid.M},), got {v.shape}")
        if not np.isfinite(v).all():
            raise ConfigurationError("SpaceField values must be finite")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class FieldPath:
    """A field on the full lattice: (K+1) x M values, row 0 at t = 0."""

    values: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        v = _readonly(self.values)
        if v.shape != self.grid.shape_path:
            raise ShapeMismatchError(
                f"FieldPath needs shape {self.grid.shape_path}, got {v.shape}")
        if not np.isfinite(v).all():
            raise ConfigurationError("FieldPath values must be finite")
        object.__setattr__(self, "values", v)

    def initial(self):
        return SpaceField(self.values[0], self.grid)


# ---------------------------------------------------------------------------
# difference stencils (periodic)
# ---------------------------------------------------------------------------

def forward_diff(a, dx):
    """(a_{i+1} - a_i)/dx along the last axis, periodic."""
    a = np.asarray(a, dtype=float)
    return (np.roll(a, -1, axis=-1) - a) / dx


def backward_diff(a, dx):
    """(a_i - a_{i-1})/dx along the last axis, periodic."""
    a = np.asarray(a, dtype=float)
    return (a - np.roll(a, 1, axis=-1)) / dx


def central_diff(a, dx):
    """(a_{i+1} - a_{i-1})/(2 dx) along the last axis, periodic."""
    a = np.asarray(a, dtype=float)
    return (np.roll(a, -1, axis=-1) - np.roll(a, 1, axis=-1)) / (2.0 * dx)


def laplacian(a, dx):
    """(a_{i+1} - 2 a_i + a_{i-1})/dx^2 along the last axis, periodic."""
    a = np.asarray(a, dtype=float)
    return (np.roll(a, -1, axis=-1) - 2.0 * a + np.roll(a, 1, axis=-1)) / (dx * dx)


def spatial_stencils(f: SpaceField):
    """Central gradient and 3-point Laplacian of a slice.

    Returns
    -------
    (SpaceField, SpaceField)
        (gradient, laplacian), both periodic.
    """
    g = central_diff(f.values, f.grid.dx)
    l = laplacian(f.values, f.grid.dx)
    return SpaceField(g, f.grid), SpaceField(l, f.grid)


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpaceTimeTestFunction:
    """phi = discrete d/dx of a separable window psi(t,x) = a(t) b(x).

    phi and dphi_dt are sampled on the full (K+1) x M lattice; every row of
    phi sums to zero exactly (telescoping of the periodic forward
    difference).  dphi_dt uses the analytic a'(t), so no time-difference
    error enters weak-form residuals.  The time factor may be nonzero at
    t = 0 (the time axis is closed on the left) but must vanish on a
    neighborhood of t = T.
    """

    phi: np.ndarray
    dphi_dt: np.ndarray
    psi_params: dict
    grid: GridSpec
    label: str

    def __post_init__(self):
        object.__setattr__(self, "phi", _readonly(self.phi))
        object.__setattr__(self, "dphi_dt", _readonly(self.dphi_dt))

    @property
    def vanishes_at_zero(self):
        return bool(np.all(self.phi[0] == 0.0))


@dataclass(frozen=True)
class SpatialTestFunction:
    """phi(x) = discrete d/dx of a bump on one time slice; zero lattice sum."""

    phi: np.ndarray
    psi_params: dict
    grid: GridSpec
    label: str

    def __post_init__(self):
        object.__setattr__(self, "phi", _readonly(self.phi))


def _check_spatial_support(grid, center, width):
    if width <= 0:
        raise ConfigurationError(f"b_width must be positive, got {width}")
    lo, hi = center - width, center + width
    margin = 4 * grid.dx
    if lo < margin or hi > grid.L - margin:
        raise SupportViolationError(
            f"spatial bump support [{lo:.6g}, {hi:.6g}] must stay >= 4*dx "
            f"away from the periodic seam of [0, {grid.L}]")


def make_test_function(grid, a_center, a_width, b_center, b_width,
                       amplitude=1.0, label=None):
    """Build a :class:`SpaceTimeTestFunction` from bump parameters.

    Parameters
    ----------
    grid : GridSpec
    a_center, a_width : float
        Time window a(t) = bump((t - a_center)/a_width).  The support may be
        truncated at t = 0, but a_center + a_width must be < T so the window
        vanishes on a neighborhood of the horizon.
    b_center, b_width : float
        Spatial bump b(x); its support must keep a 4*dx margin from the seam.
    amplitude : float
        Overall scale of psi.
    """
    if a_width <= 0:
        raise ConfigurationError(f"a_width must be positive, got {a_width}")
    if a_center + a_width >= grid.T:
        raise SupportViolationError(
            f"time window support reaches {a_center + a_width:.6g} but must "
            f"end strictly before T = {grid.T:.6g}")
    _check_spatial_support(grid, b_center, b_width)

    a = bump((grid.t - a_center) / a_width)
    da = bump_derivative((grid.t - a_center) / a_width) / a_width
    b = bump((grid.x - b_center) / b_width)
    db_fwd = forward_diff(b, grid.dx)

    psi = amplitude * a[:, None] * b[None, :]
    phi = forward_diff(psi, grid.dx)
    dphi = amplitude * da[:, None] * db_fwd[None, :]

    params = dict(a_center=a_center, a_width=a_width, b_center=b_center,
                  b_width=b_width, amplitude=amplitude)
    if label is None:
        label = f"tf(a={a_center:g}±{a_width:g}, b={b_center:g}±{b_width:g})"
    return SpaceTimeTestFunction(phi, dphi, params, grid, label)


def make_spatial_test_function(grid, center, width, amplitude=1.0, label=None):
    """Build a :class:`SpatialTestFunction`: forward difference of a bump."""
    if width <= 0:
        raise ConfigurationError(f"width must be positive, got {width}")
    _check_spatial_support(grid, center, width)
    psi = amplitude * bump((grid.x - center) / width)
    phi = forward_diff(psi, grid.dx)
    params = dict(center=center, width=width, amplitude=amplitude)
    if label is None:
        label = f"sf(b={center:g}±{width:g})"
    return SpatialTestFunction(phi, params, grid, label)


# ---------------------------------------------------------------------------
# pairings
# ---------------------------------------------------------------------------

def _phi_array(phi, shape, what):
    if isinstance(phi, SpaceTimeTestFunction):
        phi = phi.phi
    phi = np.asarray(phi, dtype=float)
    if phi.shape != shape:
        raise ShapeMismatchError(f"{what} needs shape {shape}, got {phi.shape}")
    return phi


def pair(f: FieldPath, phi):
    """Rectangle-rule space-time pairing sum_{k,i} F[k,i] phi[k,i] dt dx.

    All K+1 rows enter; the top row contributes nothing because valid test
    functions vanish there.
    """
    phi = _phi_array(phi, f.grid.shape_path, "test-function samples")
    return float(f.values.ravel() @ phi.ravel()) * f.grid.dt * f.grid.dx


def pair_space(values, weights, grid):
    """Spatial pairing sum_i F_i w_i dx of one slice against a weight."""
    v = values.values if isinstance(values, SpaceField) else np.asarray(values, dtype=float)
    w = weights.phi if isinstance(weights, SpatialTestFunction) else np.asarray(weights, dtype=float)
    if v.shape != (grid.M,) or w.shape != (grid.M,):
        raise ShapeMismatchError(
            f"spatial pairing needs two ({grid.M},) arrays, got {v.shape} and {w.shape}")
    return float(v @ w) * grid.dx
