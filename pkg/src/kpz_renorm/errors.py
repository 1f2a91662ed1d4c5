"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid construction parameters; the message names the offending field."""


class SupportViolationError(ConfigurationError):
    """A bump's support leaks past the time horizon or touches the periodic seam."""


class ResolutionError(ConfigurationError):
    """A kernel or delta profile is too narrow for the lattice to resolve."""


class ShapeMismatchError(ValueError):
    """Array shapes do not match the grid they are paired against."""


class GridMismatchError(ValueError):
    """Objects built on different grids were combined."""


class CouplingMismatchError(ValueError):
    """Sequence fields compared without a shared underlying noise realization."""


class XDependenceError(ValueError):
    """An input required to be constant in space varies along the spatial axis."""


class PositivityError(RuntimeError):
    """A heat-equation solution lost positivity, or a logarithm saw a
    non-positive entry."""


class SolverOverflowError(RuntimeError):
    """A height field exceeded the configured magnitude bound."""
