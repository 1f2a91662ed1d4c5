"""Sequence fields, the quotient by x-independent paths, association trends,
weak-form residuals, nonlinearity limits, and sections at t = 0.

A :class:`SequenceField` holds one path per mollification level, all driven
by the same noise realization, and stands for a representative of a class in
the quotient algebra: adding any x-independent path to a representative
changes no pairing against zero-mean test functions, to machine precision.

Limits in n or in the delta-net width cannot be taken numerically; they are
replaced by explicit trend criteria (halving ratios, log-log slopes, Cauchy
gaps) whose thresholds are part of each report.
"""

from dataclasses import dataclass

import numpy as np

from .bumps import one_sided_profile
from .errors import (
    ConfigurationError,
    CouplingMismatchError,
    GridMismatchError,
    ResolutionError,
    ShapeMismatchError,
    XDependenceError,
)
from .grid import (
    FieldPath,
    GridSpec,
    SpaceField,
    SpatialTestFunction,
    backward_diff,
    central_diff,
    forward_diff,
    laplacian,
    pair,
    pair_space,
)
from .noise import noise_pairing

__all__ = [
    "SequenceField",
    "AssociationReport",
    "StrictDeltaNet",
    "quotient_check",
    "associated",
    "derivative_class_check",
    "weak_residual",
    "nonlinearity_limit",
    "section_at_zero",
    "make_delta_net",
]


@dataclass(frozen=True)
class SequenceField:
    """Coupled representative of a sequence class: one path per level.

    levels must be strictly increasing with at least three entries (trend
    verdicts need three points); all paths share one grid and, when known,
    one (seed, replica_id) noise provenance.
    """

    levels: tuple
    paths: tuple
    label: str = ""
    seed: int | None = None
    replica_id: int | None = None

    def __post_init__(self):
        levels = tuple(int(n) for n in self.levels)
        paths = tuple(self.paths)
        if len(levels) < 3:
            raise ConfigurationError("SequenceField needs at least 3 levels")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ConfigurationError(f"levels must be strictly increasing, got {levels}")
        if len(paths) != len(levels):
            raise ConfigurationError("one path per level required")
        g = paths[0].grid
        if any(p.grid != g for p in paths):
            raise GridMismatchError("all paths in a SequenceField must share one grid")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "paths", paths)

    @property
    def grid(self) -> GridSpec:
        return self.paths[0].grid


def _require_x_independent(seq, what="input"):
    for n, p in zip(seq.levels, seq.paths):
        v = p.values
        spread = np.abs(v - v[:, :1]).max()
        if spread != 0.0:
            k = int(np.argmax(np.abs(v - v[:, :1]).max(axis=1)))
            raise XDependenceError(
                f"{what} at level n={n} varies in x (row k={k}, spread {spread:.3g}); "
                "paths here must be exactly constant in space")


@dataclass(frozen=True)
class QuotientCheckReport:
    max_abs_pairing: float
    entries: tuple          # (level, test label, pairing)
    threshold: float
    passed: bool


def quotient_check(seq: SequenceField, phis, threshold=1e-12):
    """Pair x-independent paths against zero-mean test functions.

    Every pairing must vanish to machine precision — this is exact
    telescoping, not small-quadrature error — and the report records the
    worst offender against ``threshold``.
    """
    _require_x_independent(seq, "quotient_check input")
    entries = []
    for n, p in zip(seq.levels, seq.paths):
        for tf in phis:
            entries.append((n, tf.label, pair(p, tf)))
    worst = max((abs(v) for *_, v in entries), default=0.0)
    return QuotientCheckReport(worst, tuple(entries), threshold, worst <= threshold)


# ---------------------------------------------------------------------------
# association
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestFunctionTrend:
    label: str
    levels: tuple
    values: tuple           # e_n per level
    ratio: float            # |e at top level| / |e at bottom level|
    slope: float            # log-log slope of |e_n| vs n
    verdict: str


@dataclass(frozen=True)
class AssociationReport:
    trends: tuple
    verdict: str            # associated | not_associated | inconclusive
    ratio_threshold: float
    floor: float

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "ratio_threshold": self.ratio_threshold,
            "floor": self.floor,
            "test_functions": [
                {
                    "label": t.label,
                    "levels": list(t.levels),
                    "pairings": list(t.values),
                    "ratio": t.ratio,
                    "slope": t.slope,
                    "verdict": t.verdict,
                }
                for t in self.trends
            ],
        }


def _trend(label, levels, e, ratio_threshold, floor):
    e = np.asarray(e, dtype=float)
    mags = np.abs(e)
    if mags.max() <= floor:
        return TestFunctionTrend(label, tuple(levels), tuple(e), 0.0, -np.inf, "associated")
    ratio = mags[-1] / max(mags[0], floor)
    slope = float(np.polyfit(np.log(levels), np.log(np.maximum(mags, floor)), 1)[0])
    if ratio <= ratio_threshold and slope < 0.0:
        verdict = "associated"
    elif ratio > 1.0:
        verdict = "not_associated"
    else:
        verdict = "inconclusive"
    return TestFunctionTrend(label, tuple(levels), tuple(e), float(ratio), slope, verdict)


def _overall(trends):
    if all(t.verdict == "associated" for t in trends):
        return "associated"
    if any(t.verdict == "not_associated" for t in trends):
        return "not_associated"
    return "inconclusive"


def associated(F: SequenceField, G_or_ref, phis, ratio_threshold=0.5, floor=1e-12):
    """Trend verdict for association of two sequences, or of a sequence with
    a reference path.

    For two sequences the pairings of F_n - G_n are tracked; both must share
    the grid, the levels, and (when recorded) the noise provenance.  For a
    reference path the pairings of F_n are compared against the reference's.
    The verdict per test function requires the top-level magnitude to fall
    to ``ratio_threshold`` of the bottom-level one and a negative log-log
    slope; exact zeros below ``floor`` short-circuit to associated.
    """
    trends = []
    if isinstance(G_or_ref, SequenceField):
        G = G_or_ref
        if G.grid != F.grid:
            raise GridMismatchError("sequence fields live on different grids")
        if G.levels != F.levels:
            raise CouplingMismatchError(
                f"level sets differ: {F.levels} vs {G.levels}")
        if (F.seed is not None and G.seed is not None
                and (F.seed, F.replica_id) != (G.seed, G.replica_id)):
            raise CouplingMismatchError(
                "sequence fields carry different noise provenance; association "
                "of sequences requires one shared realization")
        for tf in phis:
            e = [pair(fp, tf) - pair(gp, tf) for fp, gp in zip(F.paths, G.paths)]
            trends.append(_trend(tf.label, F.levels, e, ratio_threshold, floor))
    else:
        ref = G_or_ref
        if not isinstance(ref, FieldPath):
            raise ConfigurationError("second argument must be a SequenceField or FieldPath")
        if ref.grid != F.grid:
            raise GridMismatchError("reference path lives on a different grid")
        for tf in phis:
            r = pair(ref, tf)
            e = [pair(fp, tf) - r for fp in F.paths]
            trends.append(_trend(tf.label, F.levels, e, ratio_threshold, floor))
    trends = tuple(trends)
    return AssociationReport(trends, _overall(trends), ratio_threshold, floor)


# ---------------------------------------------------------------------------
# derivatives on classes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DerivativeClassReport:
    derivative_mismatch: float      # reps vs reps + offsets, max abs
    transfer_mismatch: float        # direct vs summation-by-parts pairing
    direct: "AssociationReport | None"
    transferred: "AssociationReport | None"

    @property
    def verdicts_match(self):
        if self.direct is None:
            return True
        return self.direct.verdict == self.transferred.verdict


def _derivative_paths(seq):
    g = seq.grid
    return [backward_diff(p.values, g.dx) for p in seq.paths]


def derivative_class_check(F: SequenceField, offsets: SequenceField, phis, G=None,
                           ratio_threshold=0.5, floor=1e-12):
    """Representative independence of the spatial derivative.

    Checks (a) that differentiating F and F + offsets (offsets exactly
    x-independent) gives identical paths to rounding, and (b) that the
    derivative pairing transfers onto the test function by discrete
    summation by parts: <d/dx F, phi> = -<F, forward-d/dx phi> with matched
    backward/forward stencils.  When a coupled G is supplied, association of
    the derivatives is evaluated both directly and through the transfer, and
    the two verdicts are reported side by side.
    """
    if offsets.levels != F.levels:
        raise CouplingMismatchError("offsets must carry the same levels as F")
    if offsets.grid != F.grid:
        raise GridMismatchError("offsets live on a different grid")
    _require_x_independent(offsets, "offsets")

    g = F.grid
    dmax = 0.0
    for p, off in zip(F.paths, offsets.paths):
        d1 = backward_diff(p.values, g.dx)
        d2 = backward_diff(p.values + off.values, g.dx)
        dmax = max(dmax, float(np.abs(d1 - d2).max()))

    tmax = 0.0
    for p in F.paths:
        dv = backward_diff(p.values, g.dx)
        for tf in phis:
            direct = float(dv.ravel() @ tf.phi.ravel()) * g.dt * g.dx
            transferred = -float(p.values.ravel() @ forward_diff(tf.phi, g.dx).ravel()) * g.dt * g.dx
            tmax = max(tmax, abs(direct - transferred))

    direct_rep = transferred_rep = None
    if G is not None:
        if G.grid != F.grid or G.levels != F.levels:
            raise CouplingMismatchError("G must share grid and levels with F")
        trends_d, trends_t = [], []
        for tf in phis:
            e_direct, e_transfer = [], []
            for fp, gp in zip(F.paths, G.paths):
                diff = fp.values - gp.values
                dd = backward_diff(diff, g.dx)
                e_direct.append(float(dd.ravel() @ tf.phi.ravel()) * g.dt * g.dx)
                e_transfer.append(
                    -float(diff.ravel() @ forward_diff(tf.phi, g.dx).ravel()) * g.dt * g.dx)
            trends_d.append(_trend(tf.label, F.levels, e_direct, ratio_threshold, floor))
            trends_t.append(_trend(tf.label, F.levels, e_transfer, ratio_threshold, floor))
        direct_rep = AssociationReport(tuple(trends_d), _overall(trends_d), ratio_threshold, floor)
        transferred_rep = AssociationReport(tuple(trends_t), _overall(trends_t), ratio_threshold, floor)

    return DerivativeClassReport(dmax, tmax, direct_rep, transferred_rep)


# ---------------------------------------------------------------------------
# weak-form residual
# ---------------------------------------------------------------------------

def weak_residual(H: FieldPath, noise, moll, f, nonlinearity, phi,
                  include_initial_term=True):
    """Weak-form defect of a height path against one test function.

    Returns  <H, d/dt phi> + sum_i f_i phi[0,i] dx + <Lap H, phi>
             + <nonlinearity, phi> + Ito pairing of phi against the noise
    (mollified through the exact adjoint when ``moll`` is given).  The
    initial-data term is what integration by parts in time produces when
    phi(0,.) != 0; ``include_initial_term=False`` evaluates the variant
    without it, which matches the inclusive form to rounding whenever
    phi(0,.) = 0.
    """
    g = H.grid
    fv = f.values if isinstance(f, SpaceField) else np.asarray(f, dtype=float)
    if fv.shape != (g.M,):
        raise ShapeMismatchError(f"f needs shape ({g.M},), got {fv.shape}")
    if nonlinearity.grid != g:
        raise GridMismatchError("nonlinearity path lives on a different grid")

    lap_pairing = float(laplacian(H.values, g.dx).ravel() @ phi.phi.ravel()) * g.dt * g.dx
    val = (
        float(H.values.ravel() @ phi.dphi_dt.ravel()) * g.dt * g.dx
        + lap_pairing
        + pair(nonlinearity, phi)
    )
    if include_initial_term:
        val += float(fv @ phi.phi[0]) * g.dx
    if noise is not None:
        val += noise_pairing(noise, phi.phi[:-1], moll)
    return val


# ---------------------------------------------------------------------------
# nonlinearity limit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NonlinearityTrend:
    label: str
    levels: tuple
    values: tuple
    first_gap: float
    last_gap: float
    converged: bool


@dataclass(frozen=True)
class NonlinearityReport:
    trends: tuple
    cauchy_ratio: float
    floor: float

    @property
    def converged(self):
        return all(t.converged for t in self.trends)


def nonlinearity_limit(H_seq: SequenceField, phis, cauchy_ratio=0.5, floor=1e-12):
    """Pairings of the squared central gradient across levels.

    q_n(phi) = <(D0 H_n)^2, phi>; the Cauchy criterion requires the last gap
    |q_{n_m} - q_{n_m-1}| to fall to ``cauchy_ratio`` of the first gap (or
    both below ``floor``).
    """
    g = H_seq.grid
    trends = []
    squares = [central_diff(p.values, g.dx) ** 2 for p in H_seq.paths]
    for tf in phis:
        q = [float(s.ravel() @ tf.phi.ravel()) * g.dt * g.dx for s in squares]
        first = abs(q[1] - q[0])
        last = abs(q[-1] - q[-2])
        ok = (last <= cauchy_ratio * first) or (first <= floor and last <= floor)
        trends.append(NonlinearityTrend(tf.label, H_seq.levels, tuple(q), first, last, ok))
    return NonlinearityReport(tuple(trends), cauchy_ratio, floor)


# ---------------------------------------------------------------------------
# sections at t = 0
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StrictDeltaNet:
    """Sampled one-sided delta net: rho_eps(t) = profile(t/eps)/eps.

    Each member is renormalized to exact unit lattice mass sum rho*dt = 1;
    the profile is non-negative, so the uniform L1 bound is automatic.
    """

    grid: GridSpec
    epsilons: tuple
    samples: tuple          # one (K+1,) array per epsilon
    profile_name: str = "one_sided_bump"

    def __post_init__(self):
        sams = tuple(np.ascontiguousarray(s) for s in self.samples)
        for s in sams:
            s.setflags(write=False)
        object.__setattr__(self, "samples", sams)


def make_delta_net(grid, epsilons):
    """Sample the one-sided profile at each width in ``epsilons``.

    Widths must be strictly decreasing, resolved by the time lattice
    (eps >= 4*dt), and smaller than the horizon.
    """
    eps = tuple(float(e) for e in epsilons)
    if len(eps) < 2:
        raise ConfigurationError("a delta net needs at least two widths")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigurationError(f"epsilons must be strictly decreasing, got {eps}")
    if eps[0] >= grid.T:
        raise ConfigurationError(
            f"largest epsilon {eps[0]:g} must be below the horizon T = {grid.T:g}")
    if eps[-1] < 4 * grid.dt:
        raise ResolutionError(
            f"smallest epsilon {eps[-1]:g} under-resolved: need eps >= 4*dt = {4 * grid.dt:g}")
    samples = []
    for e in eps:
        raw = one_sided_profile(grid.t / e)
        mass = raw.sum() * grid.dt
        if mass <= 0:
            raise ResolutionError(f"delta profile at eps={e:g} has no lattice support")
        samples.append(raw / mass)
    return StrictDeltaNet(grid, eps, tuple(samples))


@dataclass(frozen=True)
class SectionReport:
    epsilons: tuple
    values: tuple           # s_eps
    target: float
    errors: tuple           # |s_eps - target|
    ratios: tuple           # consecutive error ratios
    verdict: bool           # endpoint halving (or floor) criterion
    floor: float


def section_at_zero(H: FieldPath, net: StrictDeltaNet, phi_x: SpatialTestFunction,
                    f, floor=1e-9):
    """Delta-net localization of a path at t = 0 against a spatial pairing.

    s_eps = sum_k sum_i H[k,i] rho_eps(t_k) phi_x[i] dt dx, compared with
    the initial pairing sum f phi_x dx.  The verdict asks the smallest-eps
    error to be at most half the largest-eps error, or both to sit below
    ``floor``.
    """
    g = H.grid
    if net.grid != g:
        raise GridMismatchError("delta net lives on a different grid")
    if phi_x.grid != g:
        raise GridMismatchError("spatial test function lives on a different grid")
    fv = f.values if isinstance(f, SpaceField) else np.asarray(f, dtype=float)
    target = pair_space(fv, phi_x.phi, g)

    slice_pairings = H.values @ phi_x.phi * g.dx      # (K+1,) spatial pairings
    values = tuple(float(slice_pairings @ rho) * g.dt for rho in net.samples)
    errors = tuple(abs(v - target) for v in values)
    ratios = tuple(
        errors[i + 1] / errors[i] if errors[i] > floor else 0.0
        for i in range(len(errors) - 1)
    )
    verdict = (errors[-1] <= 0.5 * errors[0]) or (errors[0] <= floor and errors[-1] <= floor)
    return SectionReport(net.epsilons, values, target, errors, ratios, verdict, floor)
