"""Lattice space-time white noise and its mollification.

A white-noise realization stores density increments: entry (k, i) is the
noise mass over the cell [t_k, t_{k+1}) x [x_i, x_{i+1}) divided by dx, so it
is N(0, dt/dx) and solver update rules read like the continuum Ito
equations.  Sampling is a pure function of (seed, replica_id, grid): the
counter-based Philox generator is keyed by the seed and jumped per replica,
so replicas are independent and reproducible regardless of scheduling.

Mollification convolves each time slice with a rescaled bump kernel of level
n (width 2/n), renormalized to exact unit lattice mass so constants are
preserved exactly.  All levels applied to one realization are deterministic
linear images of it.
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .bumps import bump, bump_mass, bump_square_mass
from .errors import (
    ConfigurationError,
    GridMismatchError,
    ResolutionError,
    ShapeMismatchError,
)
from .grid import GridSpec, make_grid

__all__ = [
    "WhiteNoiseLattice",
    "MollifierOp",
    "MollifiedNoisePath",
    "ito_constant",
    "sample_white_noise",
    "make_mollifier",
    "mollify_noise",
    "mollify_noise_multi",
    "mollified_column",
    "empirical_quadratic_variation",
    "noise_pairing",
    "coarsen_in_time",
    "coarsen_in_space",
]


@lru_cache(maxsize=1)
def ito_constant():
    """∫ rho^2 for the unit-mass bump mollifier generator rho = B/∫B.

    This is the constant C in the quadratic variation C*n*t of the level-n
    mollified noise at a fixed point.  Computed once by adaptive quadrature.
    """
    return bump_square_mass() / bump_mass() ** 2


def _readonly(a):
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class WhiteNoiseLattice:
    """One realization of lattice white noise: K x M density increments."""

    increments: np.ndarray
    grid: GridSpec
    seed: int
    replica_id: int

    def __post_init__(self):
        inc = _readonly(self.increments)
        if inc.shape != (self.grid.K, self.grid.M):
            raise ShapeMismatchError(
                f"increments need shape {(self.grid.K, self.grid.M)}, got {inc.shape}")
        object.__setattr__(self, "increments", inc)

    @cached_property
    def cumulative(self):
        """(K+1) x M running sums W_{t_k}(x_i); row 0 is zero."""
        c = np.vstack([np.zeros((1, self.grid.M)), np.cumsum(self.increments, axis=0)])
        return _readonly(c)


def sample_white_noise(grid, seed, replica_id=0):
    """Draw K x M independent N(0, dt/dx) increments.

    Deterministic in (seed, replica_id, grid); replica streams come from
    Philox jump-ahead so they are statistically independent.
    """
    if not (isinstance(seed, (int, np.integer)) and seed >= 0):
        raise ConfigurationError(f"seed must be a non-negative integer, got {seed}")
    if not (isinstance(replica_id, (int, np.integer)) and replica_id >= 0):
        raise ConfigurationError(f"replica_id must be a non-negative integer, got {replica_id}")
    rng = np.random.Generator(np.random.Philox(key=int(seed)).jumped(int(replica_id)))
    inc = rng.standard_normal((grid.K, grid.M)) * np.sqrt(grid.dt / grid.dx)
    return WhiteNoiseLattice(inc, grid, int(seed), int(replica_id))


# ---------------------------------------------------------------------------
# mollifier
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MollifierOp:
    """Discrete level-n mollification operator on a fixed grid.

    kernel : M samples of n*rho(n*x) at wrapped offsets, renormalized so
        sum(kernel)*dx == 1 exactly.
    C : the quadrature constant ∫ rho^2 (grid independent).
    C_n_kernel : lattice autocorrelation of the kernel; C_n_kernel[0]
        approximates n*C and E[W^n_t(x) W^n_s(y)] = min(s,t) *
        C_n_kernel[(i-j) mod M] holds exactly on the lattice.
    """

    grid: GridSpec
    n: int
    kernel: np.ndarray
    C: float
    C_n_kernel: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "kernel", _readonly(self.kernel))
        object.__setattr__(self, "C_n_kernel", _readonly(self.C_n_kernel))

    @cached_property
    def kernel_hat(self):
        h = np.fft.rfft(self.kernel)
        h.setflags(write=False)
        return h


def _wrapped_offsets(grid):
    j = np.arange(grid.M)
    return (((j + grid.M // 2) % grid.M) - grid.M // 2) * grid.dx


def make_mollifier(grid, n):
    """Build a :class:`MollifierOp` for level n.

    The kernel support 2/n must span at least 8 lattice cells (n <= M/(4L))
    and fit in half the domain (n >= 4/L); otherwise a ResolutionError names
    the violated constraint.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ConfigurationError(f"mollification level n must be a positive integer, got {n}")
    n = int(n)
    if n > grid.M / (4 * grid.L):
        raise ResolutionError(
            f"n={n} under-resolved: kernel width 2/n must span >= 8 cells, "
            f"need n <= M/(4L) = {grid.M / (4 * grid.L):g}")
    if n < 4 / grid.L:
        raise ResolutionError(
            f"n={n} too coarse: kernel support 2/n must fit in half the "
            f"domain, need n >= 4/L = {4 / grid.L:g}")
    raw = n * bump(n * _wrapped_offsets(grid))
    kernel = raw / (raw.sum() * grid.dx)
    khat = np.fft.rfft(kernel)
    cn = np.fft.irfft(khat * np.conj(khat), n=grid.M) * grid.dx
    return MollifierOp(grid, n, kernel, ito_constant(), cn)


def _mollify_rows(rows, moll, adjoint=False):
    """Periodic convolution (or its adjoint) of each row with the kernel."""
    h = np.conj(moll.kernel_hat) if adjoint else moll.kernel_hat
    return np.fft.irfft(np.fft.rfft(rows, axis=-1) * h, n=moll.grid.M, axis=-1) * moll.grid.dx


class MollifiedNoisePath:
    """Level-n mollified noise: increments K x M plus running sums on demand."""

    def __init__(self, increments, mollifier, grid, seed, replica_id):
        self.increments = _readonly(increments)
        if self.increments.shape != (grid.K, grid.M):
            raise ShapeMismatchError(
                f"increments need shape {(grid.K, grid.M)}, got {self.increments.shape}")
        self.mollifier = mollifier
        self.grid = grid
        self.seed = seed
        self.replica_id = replica_id

    @cached_property
    def cumulative(self):
        """(K+1) x M values W^n_{t_k}(x_i); row 0 is zero."""
        c = np.vstack([np.zeros((1, self.grid.M)), np.cumsum(self.increments, axis=0)])
        return _readonly(c)


def mollify_noise(noise, moll):
    """Convolve a white-noise realization with a mollifier kernel."""
    if noise.grid != moll.grid:
        raise GridMismatchError("noise and mollifier live on different grids")
    inc = _mollify_rows(noise.increments, moll)
    return MollifiedNoisePath(inc, moll, noise.grid, noise.seed, noise.replica_id)


def mollify_noise_multi(noise, molls):
    """Mollify one realization at several levels, sharing the forward FFT.

    Returns one :class:`MollifiedNoisePath` per mollifier; all are coupled
    through the same underlying noise.
    """
    for m in molls:
        if noise.grid != m.grid:
            raise GridMismatchError("noise and mollifier live on different grids")
    fw = np.fft.rfft(noise.increments, axis=-1)
    out = []
    for m in molls:
        inc = np.fft.irfft(fw * m.kernel_hat, n=noise.grid.M, axis=-1) * noise.grid.dx
        out.append(MollifiedNoisePath(inc, m, noise.grid, noise.seed, noise.replica_id))
    return tuple(out)


def mollified_column(noise, moll, x_index):
    """The single column ΔW^n[:, x_index] as a direct windowed sum.

    Same values as ``mollify_noise(noise, moll).increments[:, x_index]`` up
    to rounding, at a fraction of the cost; used by quadratic-variation
    scans over many replicas.
    """
    if noise.grid != moll.grid:
        raise GridMismatchError("noise and mollifier live on different grids")
    M = noise.grid.M
    x_index = int(x_index) % M
    # kernel[(x - j) mod M] as a weight vector over source cells j
    w = moll.kernel[(x_index - np.arange(M)) % M] * noise.grid.dx
    return noise.increments @ w


def empirical_quadratic_variation(path, x_index):
    """sum_k (ΔW^n[k, x_index])^2, the realized quadratic variation at a point."""
    x_index = int(x_index)
    if not 0 <= x_index < path.grid.M:
        raise ShapeMismatchError(f"x_index {x_index} outside 0..{path.grid.M - 1}")
    col = path.increments[:, x_index]
    return float(col @ col)


def noise_pairing(noise, phi_rows, moll=None):
    """Ito integral of test samples against the noise: sum phi~ ΔW dx.

    phi_rows must be K x M, sampled at left time endpoints.  When a
    mollifier is given, the exact adjoint of the discrete mollification is
    applied to each row first, so pairing phi against the mollified noise
    and pairing the adjoint-mollified phi against the raw noise agree to
    rounding per realization.
    """
    phi_rows = np.asarray(phi_rows, dtype=float)
    if phi_rows.shape != (noise.grid.K, noise.grid.M):
        raise ShapeMismatchError(
            f"phi_rows need shape {(noise.grid.K, noise.grid.M)}, got {phi_rows.shape}")
    if moll is not None:
        if moll.grid != noise.grid:
            raise GridMismatchError("mollifier and noise live on different grids")
        phi_rows = _mollify_rows(phi_rows, moll, adjoint=True)
    return float(phi_rows.ravel() @ noise.increments.ravel()) * noise.grid.dx


# ---------------------------------------------------------------------------
# refinement coupling
# ---------------------------------------------------------------------------

def coarsen_in_time(noise, factor):
    """Aggregate increments over groups of `factor` consecutive steps.

    The result is the same Brownian sheet sampled at step factor*dt, which
    couples refinement studies in dt deterministically.
    """
    factor = int(factor)
    if factor < 1 or noise.grid.K % factor:
        raise ConfigurationError(
            f"time coarsening factor {factor} must divide K = {noise.grid.K}")
    g = noise.grid
    inc = noise.increments.reshape(g.K // factor, factor, g.M).sum(axis=1)
    coarse = make_grid(g.L, g.M, g.dt * factor, g.K // factor)
    return WhiteNoiseLattice(inc, coarse, noise.seed, noise.replica_id)


def coarsen_in_space(noise, factor):
    """Merge groups of `factor` adjacent cells (density increments average)."""
    factor = int(factor)
    if factor < 1 or noise.grid.M % factor:
        raise ConfigurationError(
            f"space coarsening factor {factor} must divide M = {noise.grid.M}")
    g = noise.grid
    if g.M // factor < 8:
        raise ConfigurationError("space coarsening would leave fewer than 8 cells")
    inc = noise.increments.reshape(g.K, g.M // factor, factor).mean(axis=2)
    coarse = make_grid(g.L, g.M // factor, g.dt, g.K)
    return WhiteNoiseLattice(inc, coarse, noise.seed, noise.replica_id)
